#pragma once

#include "previs/render.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace previs {

/// 8-bit RGB PNG, no ancillary chunks, so equal frames encode to equal bytes.
std::vector<std::uint8_t> encode_png(const Frame& frame);
void write_png(const std::filesystem::path& file, const Frame& frame);

/// Frames side by side, separated by `gap` background pixels.
Frame contact_sheet(const std::vector<Frame>& frames, int gap = 4);

/// Area-averaged downscale to the given size.
Frame downscale(const Frame& frame, ImageSize size);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);
std::string hex64(std::uint64_t v);

}  // namespace previs
