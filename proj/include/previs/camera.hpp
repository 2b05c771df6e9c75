#pragma once

#include "previs/geometry.hpp"
#include "previs/script.hpp"
#include "previs/story.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace previs {

inline constexpr double kMinFocalMm = 30.0;
inline constexpr double kMaxFocalMm = 80.0;

/// Intrinsic yaw -> pitch -> roll about camera-local Y_C (up), X_C (right)
/// and Z_C (forward). Yaw 0 / pitch 0 looks along world +x; positive pitch
/// looks up.
struct Rotation {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  bool operator==(const Rotation&) const = default;
};

struct CameraPose {
  Vec3 position = Vec3::Zero();
  Rotation rotation;
  double focal_mm = 50.0;

  bool operator==(const CameraPose& o) const
  {
    return position == o.position && rotation == o.rotation && focal_mm == o.focal_mm;
  }
};

struct CameraBasis {
  Vec3 right;
  Vec3 up;
  Vec3 forward;
};

CameraBasis camera_basis(const Rotation& r);
inline Vec3 forward_axis(const Rotation& r) { return camera_basis(r).forward; }

/// Subject-centred spherical offset: r meters, polar theta from world +z,
/// azimuth phi from world +x.
struct SphericalOffset {
  double r = 1.0;
  double theta = kPi / 2;
  double phi = 0.0;
};

Vec3 spherical_to_world(const Vec3& target, const SphericalOffset& off);
SphericalOffset world_to_spherical(const Vec3& target, const Vec3& position);

/// Level-horizon orientation (roll 0) pointing the forward axis at `target`.
/// Straight up/down views take yaw 0 (fallback axis +x).
Rotation look_at(const Vec3& camera, const Vec3& target);

/// Movement rhythm w(t) = (lambda^t - 1) / (lambda - 1), identity at lambda 1.
double easing(double lambda, double t);

/// Scale and angle presets: polar angle per shot angle, radius per shot scale
/// as a fraction of character height (at 50 mm).
struct ShotPreset {
  static double theta(ShotAngle a);
  static double radius_fraction(ShotScale s);
  static double radius(ShotScale s, double height_m) { return radius_fraction(s) * height_m; }
};

struct Framing {
  ShotScale scale = ShotScale::Medium;
  ShotAngle angle = ShotAngle::EyeLevel;
  double azimuth_rad = 0.0;  // relative to the character's facing at frame 0
  double focal_mm = 50.0;
  double aim_fraction = 0.875;  // aim point height as a fraction of character height
};

enum class Reference { Start, End };

struct GeneratorTag {
  Movement movement = Movement::Static;
  ShotScale scale = ShotScale::Medium;
  ShotAngle angle = ShotAngle::EyeLevel;
  double lambda = 1.0;
  double mu = 1.0;
  double azimuth_rad = 0.0;
  double base_azimuth_rad = 0.0;  // character facing at frame 0
  double theta = kPi / 2;
  double radius_m = 0.0;
  double sweep_rad = 0.0;
  int direction = 1;  // tilt: +1 up, pan/arc: +1 counter-clockwise, dolly/pedestal: sign of displacement
  bool end_on_subject = false;
  Reference reference = Reference::Start;
  Vec3 displacement = Vec3::Zero();
  double focal_mm = 50.0;
  double aim_fraction = 0.875;
  bool focal_clamped = false;
  bool moving_subject = false;

  bool operator==(const GeneratorTag& o) const;
};

nlohmann::json tag_to_json(const GeneratorTag& tag);
GeneratorTag tag_from_json(const nlohmann::json& j);
/// Stable one-line description, e.g. "arc/close-up/low phi=0.785 lambda=10 sweep=1.571 dir=-1".
std::string describe(const GeneratorTag& tag);

struct CameraTrajectory {
  std::vector<CameraPose> poses;
  GeneratorTag tag;
  bool negative = false;  // produced by perturbation
  std::string source_id;  // id of the clean trajectory a negative came from

  int frames() const { return static_cast<int>(poses.size()); }
};

/// Aim point of the character at frame t (position lifted to aim height).
Vec3 aim_point(const StoryParams& s, int t, double aim_fraction);

CameraTrajectory gen_static(const StoryParams& s, const Framing& f, Reference reference);
CameraTrajectory gen_follow(const StoryParams& s, const Framing& f, double lambda);
CameraTrajectory gen_push_pull(const StoryParams& s, const Framing& f, double mu, double lambda,
                               Reference reference);
CameraTrajectory gen_zoom(const StoryParams& s, const Framing& f, double mu, double lambda);

enum class RotationAxis { Pitch, Yaw };  // tilt, pan
CameraTrajectory gen_tilt_pan(const StoryParams& s, const Framing& f, RotationAxis axis, double sweep_rad,
                              double lambda, int direction, bool end_on_subject);

enum class TranslationAxis { Horizontal, Vertical };  // dolly, pedestal
CameraTrajectory gen_dolly_pedestal(const StoryParams& s, const Framing& f, TranslationAxis axis,
                                    const Vec3& displacement, double lambda);

CameraTrajectory gen_arc(const StoryParams& s, const Framing& f, double sweep_rad, double lambda, int direction);

/// Rebuilds a trajectory from its tag.
CameraTrajectory regenerate(const GeneratorTag& tag, const StoryParams& s);

struct CameraGridConfig {
  int azimuth_count = 8;
  std::vector<double> lambdas{0.1, 1.0, 10.0};
  std::vector<double> push_mu{0.5, 0.65, 0.8};
  std::vector<double> pull_mu{1.0, 1.1, 1.2};
  std::vector<double> zoom_in_mu{1.25, 1.4, 1.6};
  std::vector<double> zoom_out_mu{0.85, 0.9, 0.95};
  std::vector<double> tilt_pan_sweep_deg{30.0, 60.0};
  std::vector<double> arc_sweep_deg{90.0, 120.0};
  std::vector<double> dolly_m{1.0, 2.0};
  std::vector<double> pedestal_m{0.5, 1.0};
  double focal_mm = 50.0;
  double aim_fraction = 0.875;
};

nlohmann::json to_json(const CameraGridConfig& c);
CameraGridConfig camera_grid_from_json(const nlohmann::json& j);

/// Generator tags of the grid product applicable to `cs.movement`, deduplicated,
/// in deterministic order. Combinations a generator rejects are skipped.
std::vector<CameraTrajectory> enumerate_camera_proposals(const CameraScript& cs, const StoryParams& s,
                                                         const CameraGridConfig& cfg = {});

/// Columnar text export: header lines starting with '#', then
/// "frame x y z roll pitch yaw focal_mm" rows printed with round-trip precision.
void write_trajectory(std::ostream& out, const CameraTrajectory& c);
CameraTrajectory read_trajectory(std::istream& in);

}  // namespace previs
