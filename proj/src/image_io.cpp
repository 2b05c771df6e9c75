#include "previs/image_io.hpp"

#include "previs/error.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace previs {

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t n)
{
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void no_flush(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const Frame& frame)
{
  if (frame.width <= 0 || frame.height <= 0) throw Error(ErrorCode::Domain, "encode_png: empty frame");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, append_bytes, no_flush);
  png_set_IHDR(png, info, frame.width, frame.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < frame.height; ++y)
    png_write_row(png, const_cast<png_bytep>(frame.rgb.data() + static_cast<std::size_t>(y) * frame.width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& file, const Frame& frame)
{
  const auto bytes = encode_png(frame);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + file.string());
}

Frame contact_sheet(const std::vector<Frame>& frames, int gap)
{
  Frame sheet;
  if (frames.empty()) return sheet;
  int h = 0;
  for (const auto& f : frames) {
    sheet.width += f.width;
    h = std::max(h, f.height);
  }
  sheet.width += gap * static_cast<int>(frames.size() - 1);
  sheet.height = h;
  sheet.rgb.assign(static_cast<std::size_t>(sheet.width) * h * 3, 16);
  sheet.ids.assign(static_cast<std::size_t>(sheet.width) * h, kBackgroundId);
  int x0 = 0;
  for (const auto& f : frames) {
    for (int y = 0; y < f.height; ++y) {
      std::copy_n(f.rgb.begin() + static_cast<std::ptrdiff_t>(y) * f.width * 3, f.width * 3,
                  sheet.rgb.begin() + (static_cast<std::ptrdiff_t>(y) * sheet.width + x0) * 3);
    }
    x0 += f.width + gap;
  }
  return sheet;
}

Frame downscale(const Frame& frame, ImageSize size)
{
  Frame out;
  out.width = size.width;
  out.height = size.height;
  out.rgb.assign(static_cast<std::size_t>(size.width) * size.height * 3, 0);
  out.ids.assign(static_cast<std::size_t>(size.width) * size.height, kBackgroundId);
  const double sx = static_cast<double>(frame.width) / size.width;
  const double sy = static_cast<double>(frame.height) / size.height;
  for (int y = 0; y < size.height; ++y) {
    const int ya = static_cast<int>(std::floor(y * sy)), yb = std::max(ya + 1, static_cast<int>(std::floor((y + 1) * sy)));
    for (int x = 0; x < size.width; ++x) {
      const int xa = static_cast<int>(std::floor(x * sx)), xb = std::max(xa + 1, static_cast<int>(std::floor((x + 1) * sx)));
      double acc[3] = {0, 0, 0};
      int n = 0;
      for (int v = ya; v < std::min(yb, frame.height); ++v)
        for (int u = xa; u < std::min(xb, frame.width); ++u, ++n)
          for (int c = 0; c < 3; ++c) acc[c] += frame.rgb[(static_cast<std::size_t>(v) * frame.width + u) * 3 + c];
      for (int c = 0; c < 3; ++c)
        out.rgb[(static_cast<std::size_t>(y) * size.width + x) * 3 + c] =
            static_cast<std::uint8_t>(n ? std::lround(acc[c] / n) : 0);
    }
  }
  return out;
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n)
{
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace previs
