#pragma once

#include "previs/camera.hpp"
#include "previs/geometry.hpp"
#include "previs/story.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace previs {

class SceneGraph;

inline constexpr double kSensorHeightMm = 24.0;
inline constexpr double kNearPlaneM = 0.01;

struct ImageSize {
  int width = 1280;
  int height = 720;

  bool operator==(const ImageSize&) const = default;
};

inline constexpr ImageSize kPreviewSize{320, 180};

/// RGB raster plus the per-pixel primitive id (-1 background, 0 character,
/// 1 facing wedge, >= 2 scene primitives).
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
  std::vector<std::int32_t> ids;

  bool operator==(const Frame& o) const { return width == o.width && height == o.height && rgb == o.rgb; }
};

inline constexpr std::int32_t kBackgroundId = -1;
inline constexpr std::int32_t kCharacterId = 0;
inline constexpr std::int32_t kWedgeId = 1;

/// Pinhole intrinsics: square pixels, principal point at the image center,
/// vertical sensor height `sensor_mm`.
struct Intrinsics {
  double f_px = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

Intrinsics make_intrinsics(double focal_mm, ImageSize size, double sensor_mm = kSensorHeightMm);

/// World point in camera coordinates (right, up, forward).
Vec3 to_camera(const CameraPose& pose, const Vec3& world);

/// Image coordinates (x right, y down, pixel centers at +0.5); nullopt behind
/// the near plane.
std::optional<Vec2> project(const CameraPose& pose, const Intrinsics& k, const Vec3& world);

struct Triangle {
  std::array<Vec3, 3> v;
  std::array<std::uint8_t, 3> color;
  std::int32_t id;
};

/// Static scene geometry in world coordinates: room floors and object boxes.
struct SceneMesh {
  std::vector<Triangle> triangles;
};

SceneMesh build_scene_mesh(const SceneGraph& scene);

/// Character capsule: vertical, bottom at position.z + root_height, total
/// height h, radius rho.
struct Capsule {
  Vec3 bottom_center;  // center of the lower sphere
  Vec3 top_center;     // center of the upper sphere
  double radius = 0.25;
};

Capsule character_capsule(const CharacterState& st);

/// Vertical image extent [y_top, y_bottom] in pixels of a sphere under
/// perspective; false when the sphere is not entirely in front of the camera.
bool sphere_vertical_extent(const CameraPose& pose, const Intrinsics& k, const Vec3& center, double radius,
                            double& y_top, double& y_bottom);

struct FillMeasure {
  double fill_ratio = 0.0;   // projected height / frame height (pre-crop)
  double y_top = 0.0;
  double y_bottom = 0.0;
  bool valid = false;        // false when part of the capsule is behind the camera
};

FillMeasure analytic_fill(const CharacterState& st, const CameraPose& pose, ImageSize size);

/// Pixel-measured capsule height on a guard-band canvas with the frame's
/// intrinsics: counts the rows the ray-cast silhouette covers. Returns a
/// negative value when the silhouette reaches the canvas border.
double measure_character_height_px(const CharacterState& st, const CameraPose& pose, ImageSize size,
                                   int guard_px = 64);

Frame render_frame(const SceneMesh& mesh, const CharacterState& st, const CameraPose& pose, ImageSize size);

}  // namespace previs
