#include "previs/camera.hpp"

#include "previs/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace previs {

namespace {

constexpr double kGateEps = 1e-12;

double normalized_time(int t, int T) { return T > 1 ? static_cast<double>(t) / (T - 1) : 0.0; }

double base_facing(const StoryParams& s) { return character_at(s, 0).facing_rad; }

double preset_radius(const StoryParams& s, const Framing& f)
{
  // Radii are defined at 50 mm; longer lenses back off to hold the framing.
  return ShotPreset::radius(f.scale, s.height_m) * (f.focal_mm / 50.0);
}

GeneratorTag base_tag(const StoryParams& s, const Framing& f, Movement m)
{
  GeneratorTag tag;
  tag.movement = m;
  tag.scale = f.scale;
  tag.angle = f.angle;
  tag.azimuth_rad = wrap_angle(f.azimuth_rad);
  tag.base_azimuth_rad = base_facing(s);
  tag.theta = ShotPreset::theta(f.angle);
  tag.radius_m = preset_radius(s, f);
  tag.focal_mm = f.focal_mm;
  tag.aim_fraction = f.aim_fraction;
  return tag;
}

SphericalOffset tag_offset(const GeneratorTag& tag)
{
  return {tag.radius_m, tag.theta, wrap_angle(tag.base_azimuth_rad + tag.azimuth_rad)};
}

void check_focal(double f)
{
  if (!(f >= kMinFocalMm && f <= kMaxFocalMm))
    throw Error(ErrorCode::Domain, "focal length " + std::to_string(f) + " mm outside [30, 80]");
}

void check_direction(int d)
{
  if (d != 1 && d != -1) throw Error(ErrorCode::Domain, "direction must be +1 or -1");
}

void check_sweep(double sweep, double lo_deg, double hi_deg, const char* what)
{
  if (!(sweep >= deg_to_rad(lo_deg) - kGateEps && sweep <= deg_to_rad(hi_deg) + kGateEps))
    throw Error(ErrorCode::Domain, std::string(what) + " sweep " + std::to_string(sweep) + " rad outside range");
}

bool path_moves(const StoryParams& s)
{
  const auto& w = s.path.waypoints;
  for (const auto& p : w)
    if ((p - w.front()).norm() > 1e-9) return true;
  return false;
}

CameraTrajectory constant(const Vec3& pos, const Vec3& aim, double focal, int T, GeneratorTag tag)
{
  CameraTrajectory c;
  c.poses.assign(T, CameraPose{pos, look_at(pos, aim), focal});
  c.tag = std::move(tag);
  return c;
}

}  // namespace

CameraBasis camera_basis(const Rotation& r)
{
  const double cb = std::cos(r.pitch), sb = std::sin(r.pitch);
  const double cg = std::cos(r.yaw), sg = std::sin(r.yaw);
  const Vec3 forward(cb * cg, cb * sg, sb);
  Vec3 right(sg, -cg, 0.0);
  Vec3 up = right.cross(forward);
  if (r.roll != 0.0) {
    const double ca = std::cos(r.roll), sa = std::sin(r.roll);
    const Vec3 r2 = ca * right + sa * up;
    up = -sa * right + ca * up;
    right = r2;
  }
  return {right, up, forward};
}

Vec3 spherical_to_world(const Vec3& target, const SphericalOffset& off)
{
  const double st = std::sin(off.theta);
  return target + off.r * Vec3(std::cos(off.phi) * st, std::sin(off.phi) * st, std::cos(off.theta));
}

SphericalOffset world_to_spherical(const Vec3& target, const Vec3& position)
{
  const Vec3 d = position - target;
  SphericalOffset o;
  o.r = d.norm();
  o.theta = std::atan2(std::hypot(d.x(), d.y()), d.z());
  o.phi = std::atan2(d.y(), d.x());
  return o;
}

Rotation look_at(const Vec3& camera, const Vec3& target)
{
  const Vec3 d = target - camera;
  const double n = d.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::DegenerateLookAt, "look_at: camera coincides with target");
  const double horiz = std::hypot(d.x(), d.y());
  Rotation r;
  r.pitch = std::atan2(d.z(), horiz);
  r.yaw = horiz > 1e-12 * n ? wrap_angle(std::atan2(d.y(), d.x())) : 0.0;
  return r;
}

double easing(double lambda, double t)
{
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::Domain, "easing: lambda must be positive");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::Domain, "easing: t outside [0, 1]");
  if (lambda == 1.0 || t == 0.0 || t == 1.0) return t;
  // expm1 keeps precision for lambda near 1.
  const double l = std::log(lambda);
  return std::expm1(t * l) / std::expm1(l);
}

double ShotPreset::theta(ShotAngle a)
{
  switch (a) {
    case ShotAngle::EyeLevel: return kPi / 2;
    case ShotAngle::High: return 2 * kPi / 5;
    case ShotAngle::Low: return 4 * kPi / 5;
  }
  return kPi / 2;
}

double ShotPreset::radius_fraction(ShotScale s)
{
  switch (s) {
    case ShotScale::CloseUp: return 0.2;
    case ShotScale::Medium: return 0.5;
    case ShotScale::Full: return 1.0;
  }
  return 0.5;
}

bool GeneratorTag::operator==(const GeneratorTag& o) const
{
  return movement == o.movement && scale == o.scale && angle == o.angle && lambda == o.lambda && mu == o.mu &&
         azimuth_rad == o.azimuth_rad && base_azimuth_rad == o.base_azimuth_rad && theta == o.theta &&
         radius_m == o.radius_m && sweep_rad == o.sweep_rad && direction == o.direction &&
         end_on_subject == o.end_on_subject && reference == o.reference && displacement == o.displacement &&
         focal_mm == o.focal_mm && aim_fraction == o.aim_fraction && focal_clamped == o.focal_clamped &&
         moving_subject == o.moving_subject;
}

nlohmann::json tag_to_json(const GeneratorTag& t)
{
  return {
      {"movement", std::string(to_token(t.movement))},
      {"scale", std::string(to_token(t.scale))},
      {"angle", std::string(to_token(t.angle))},
      {"lambda", t.lambda},
      {"mu", t.mu},
      {"azimuth_rad", t.azimuth_rad},
      {"base_azimuth_rad", t.base_azimuth_rad},
      {"theta", t.theta},
      {"radius_m", t.radius_m},
      {"sweep_rad", t.sweep_rad},
      {"direction", t.direction},
      {"end_on_subject", t.end_on_subject},
      {"reference", t.reference == Reference::Start ? "start" : "end"},
      {"displacement", {t.displacement.x(), t.displacement.y(), t.displacement.z()}},
      {"focal_mm", t.focal_mm},
      {"aim_fraction", t.aim_fraction},
      {"focal_clamped", t.focal_clamped},
      {"moving_subject", t.moving_subject},
  };
}

GeneratorTag tag_from_json(const nlohmann::json& j)
{
  try {
    GeneratorTag t;
    auto m = movement_from_token(j.at("movement").get<std::string>());
    auto s = scale_from_token(j.at("scale").get<std::string>());
    auto a = angle_from_token(j.at("angle").get<std::string>());
    if (!m || !s || !a) throw Error(ErrorCode::Schema, "generator tag: unknown movement/scale/angle token");
    t.movement = *m;
    t.scale = *s;
    t.angle = *a;
    t.lambda = j.value("lambda", 1.0);
    t.mu = j.value("mu", 1.0);
    t.azimuth_rad = j.value("azimuth_rad", 0.0);
    t.base_azimuth_rad = j.value("base_azimuth_rad", 0.0);
    t.theta = j.value("theta", ShotPreset::theta(t.angle));
    t.radius_m = j.value("radius_m", 0.0);
    t.sweep_rad = j.value("sweep_rad", 0.0);
    t.direction = j.value("direction", 1);
    t.end_on_subject = j.value("end_on_subject", false);
    t.reference = j.value("reference", std::string("start")) == "end" ? Reference::End : Reference::Start;
    if (j.contains("displacement")) {
      const auto& d = j.at("displacement");
      t.displacement = Vec3(d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>());
    }
    t.focal_mm = j.value("focal_mm", 50.0);
    t.aim_fraction = j.value("aim_fraction", 0.875);
    t.focal_clamped = j.value("focal_clamped", false);
    t.moving_subject = j.value("moving_subject", false);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("generator tag: ") + e.what());
  }
}

std::string describe(const GeneratorTag& t)
{
  std::ostringstream os;
  os << to_token(t.movement) << '/' << to_token(t.scale) << '/' << to_token(t.angle);
  char buf[64];
  std::snprintf(buf, sizeof buf, " phi=%.3f", t.azimuth_rad);
  os << buf;
  auto num = [&](const char* k, double v) {
    std::snprintf(buf, sizeof buf, " %s=%.4g", k, v);
    os << buf;
  };
  switch (t.movement) {
    case Movement::Static: os << " ref=" << (t.reference == Reference::Start ? "start" : "end"); break;
    case Movement::Follow: num("lambda", t.lambda); break;
    case Movement::Push:
    case Movement::Pull:
      num("lambda", t.lambda);
      num("mu", t.mu);
      os << " ref=" << (t.reference == Reference::Start ? "start" : "end");
      break;
    case Movement::ZoomIn:
    case Movement::ZoomOut:
      num("lambda", t.lambda);
      num("mu", t.mu);
      if (t.focal_clamped) os << " clamped";
      break;
    case Movement::Tilt:
    case Movement::Pan:
      num("lambda", t.lambda);
      num("sweep", t.sweep_rad);
      os << " dir=" << t.direction << (t.end_on_subject ? " end-on" : " start-on");
      break;
    case Movement::Dolly:
    case Movement::Pedestal:
      num("lambda", t.lambda);
      num("dist", t.displacement.norm());
      os << " dir=" << t.direction;
      break;
    case Movement::Arc:
      num("lambda", t.lambda);
      num("sweep", t.sweep_rad);
      os << " dir=" << t.direction;
      break;
  }
  return os.str();
}

Vec3 aim_point(const StoryParams& s, int t, double aim_fraction)
{
  return character_position_at(s, t) + Vec3(0, 0, aim_fraction * s.height_m);
}

CameraTrajectory gen_static(const StoryParams& s, const Framing& f, Reference reference)
{
  check_focal(f.focal_mm);
  const int T = s.frames();
  GeneratorTag tag = base_tag(s, f, Movement::Static);
  tag.reference = reference;
  const Vec3 anchor = aim_point(s, reference == Reference::Start ? 0 : T - 1, f.aim_fraction);
  return constant(spherical_to_world(anchor, tag_offset(tag)), anchor, f.focal_mm, T, std::move(tag));
}

CameraTrajectory gen_follow(const StoryParams& s, const Framing& f, double lambda)
{
  check_focal(f.focal_mm);
  const int T = s.frames();
  GeneratorTag tag = base_tag(s, f, Movement::Follow);
  tag.lambda = lambda;
  const Vec3 offset = spherical_to_world(Vec3::Zero(), tag_offset(tag));
  const Vec3 lift(0, 0, f.aim_fraction * s.height_m);
  CameraTrajectory c;
  c.poses.reserve(T);
  for (int t = 0; t < T; ++t) {
    const double u = easing(lambda, normalized_time(t, T)) * (T - 1);
    const Vec3 pos = character_position_at(s, u) + lift + offset;
    c.poses.push_back({pos, look_at(pos, aim_point(s, t, f.aim_fraction)), f.focal_mm});
  }
  c.tag = std::move(tag);
  return c;
}

CameraTrajectory gen_push_pull(const StoryParams& s, const Framing& f, double mu, double lambda,
                               Reference reference)
{
  check_focal(f.focal_mm);
  if (!(mu > 0.0)) throw Error(ErrorCode::Domain, "push/pull: mu must be positive");
  if (mu == 1.0) lambda = 1.0;
  const int T = s.frames();
  GeneratorTag tag = base_tag(s, f, mu < 1.0 ? Movement::Push : Movement::Pull);
  tag.mu = mu;
  tag.lambda = lambda;
  tag.reference = reference;
  const Vec3 anchor = aim_point(s, reference == Reference::Start ? 0 : T - 1, f.aim_fraction);
  SphericalOffset off = tag_offset(tag);
  const double r0 = off.r;
  CameraTrajectory c;
  c.poses.reserve(T);
  for (int t = 0; t < T; ++t) {
    off.r = ((mu - 1.0) * easing(lambda, normalized_time(t, T)) + 1.0) * r0;
    const Vec3 pos = spherical_to_world(anchor, off);
    c.poses.push_back({pos, look_at(pos, anchor), f.focal_mm});
  }
  c.tag = std::move(tag);
  return c;
}

CameraTrajectory gen_zoom(const StoryParams& s, const Framing& f, double mu, double lambda)
{
  check_focal(f.focal_mm);
  if (!(mu > 0.0)) throw Error(ErrorCode::Domain, "zoom: mu must be positive");
  if (mu == 1.0) lambda = 1.0;
  const int T = s.frames();
  GeneratorTag tag = base_tag(s, f, mu < 1.0 ? Movement::ZoomOut : Movement::ZoomIn);
  tag.mu = mu;
  tag.lambda = lambda;
  const Vec3 anchor = aim_point(s, 0, f.aim_fraction);
  const Vec3 pos = spherical_to_world(anchor, tag_offset(tag));
  const Rotation rot = look_at(pos, anchor);
  CameraTrajectory c;
  c.poses.reserve(T);
  for (int t = 0; t < T; ++t) {
    const double raw = ((mu - 1.0) * easing(lambda, normalized_time(t, T)) + 1.0) * f.focal_mm;
    const double focal = std::clamp(raw, kMinFocalMm, kMaxFocalMm);
    if (focal != raw) tag.focal_clamped = true;
    c.poses.push_back({pos, rot, focal});
  }
  c.tag = std::move(tag);
  return c;
}

CameraTrajectory gen_tilt_pan(const StoryParams& s, const Framing& f, RotationAxis axis, double sweep_rad,
                              double lambda, int direction, bool end_on_subject)
{
  check_focal(f.focal_mm);
  check_direction(direction);
  check_sweep(sweep_rad, 30.0, 60.0, axis == RotationAxis::Pitch ? "tilt" : "pan");
  const int T = s.frames();
  GeneratorTag tag = base_tag(s, f, axis == RotationAxis::Pitch ? Movement::Tilt : Movement::Pan);
  tag.lambda = lambda;
  tag.sweep_rad = sweep_rad;
  tag.direction = direction;
  tag.end_on_subject = end_on_subject;
  const Vec3 pos = spherical_to_world(aim_point(s, 0, f.aim_fraction), tag_offset(tag));
  const Rotation on = look_at(pos, aim_point(s, end_on_subject ? T - 1 : 0, f.aim_fraction));
  const double w_on = end_on_subject ? 1.0 : 0.0;

  CameraTrajectory c;
  c.poses.reserve(T);
  for (int t = 0; t < T; ++t) {
    const double delta = direction * sweep_rad * (easing(lambda, normalized_time(t, T)) - w_on);
    Rotation r = on;
    if (axis == RotationAxis::Pitch) {
      r.pitch = on.pitch + delta;
      if (r.pitch < -kPi / 2 - kGateEps || r.pitch > kPi / 2 + kGateEps)
        throw Error(ErrorCode::Domain, "tilt: pitch leaves [-pi/2, pi/2]");
    } else {
      r.yaw = wrap_angle(on.yaw + delta);
    }
    c.poses.push_back({pos, r, f.focal_mm});
  }
  c.tag = std::move(tag);
  return c;
}

CameraTrajectory gen_dolly_pedestal(const StoryParams& s, const Framing& f, TranslationAxis axis,
                                    const Vec3& displacement, double lambda)
{
  check_focal(f.focal_mm);
  if (axis == TranslationAxis::Horizontal && std::abs(displacement.z()) > kGateEps)
    throw Error(ErrorCode::Domain, "dolly: displacement must be horizontal");
  if (axis == TranslationAxis::Vertical && std::hypot(displacement.x(), displacement.y()) > kGateEps)
    throw Error(ErrorCode::Domain, "pedestal: displacement must be vertical");
  const int T = s.frames();
  GeneratorTag tag = base_tag(s, f, axis == TranslationAxis::Horizontal ? Movement::Dolly : Movement::Pedestal);
  tag.lambda = lambda;
  tag.displacement = displacement;
  tag.moving_subject = path_moves(s);
  if (axis == TranslationAxis::Vertical) {
    tag.direction = displacement.z() < 0 ? -1 : 1;
  } else {
    const double phi = tag.base_azimuth_rad + tag.azimuth_rad;
    tag.direction = -std::sin(phi) * displacement.x() + std::cos(phi) * displacement.y() < 0 ? -1 : 1;
  }
  const Vec3 start = spherical_to_world(aim_point(s, 0, f.aim_fraction), tag_offset(tag));

  CameraTrajectory c;
  c.poses.reserve(T);
  for (int t = 0; t < T; ++t) {
    const Vec3 pos = start + easing(lambda, normalized_time(t, T)) * displacement;
    c.poses.push_back({pos, look_at(pos, aim_point(s, t, f.aim_fraction)), f.focal_mm});
  }
  c.tag = std::move(tag);
  return c;
}

CameraTrajectory gen_arc(const StoryParams& s, const Framing& f, double sweep_rad, double lambda, int direction)
{
  check_focal(f.focal_mm);
  check_direction(direction);
  check_sweep(sweep_rad, 90.0, 120.0, "arc");
  const int T = s.frames();
  GeneratorTag tag = base_tag(s, f, Movement::Arc);
  tag.lambda = lambda;
  tag.sweep_rad = sweep_rad;
  tag.direction = direction;
  tag.moving_subject = path_moves(s);
  const SphericalOffset base = tag_offset(tag);

  CameraTrajectory c;
  c.poses.reserve(T);
  for (int t = 0; t < T; ++t) {
    SphericalOffset off = base;
    off.phi = base.phi + direction * sweep_rad * easing(lambda, normalized_time(t, T));
    const Vec3 aim = aim_point(s, t, f.aim_fraction);
    const Vec3 pos = spherical_to_world(aim, off);
    c.poses.push_back({pos, look_at(pos, aim), f.focal_mm});
  }
  c.tag = std::move(tag);
  return c;
}

CameraTrajectory regenerate(const GeneratorTag& tag, const StoryParams& s)
{
  Framing f;
  f.scale = tag.scale;
  f.angle = tag.angle;
  f.azimuth_rad = tag.azimuth_rad;
  f.focal_mm = tag.focal_mm;
  f.aim_fraction = tag.aim_fraction;
  switch (tag.movement) {
    case Movement::Static: return gen_static(s, f, tag.reference);
    case Movement::Follow: return gen_follow(s, f, tag.lambda);
    case Movement::Push:
    case Movement::Pull: return gen_push_pull(s, f, tag.mu, tag.lambda, tag.reference);
    case Movement::ZoomIn:
    case Movement::ZoomOut: return gen_zoom(s, f, tag.mu, tag.lambda);
    case Movement::Tilt:
      return gen_tilt_pan(s, f, RotationAxis::Pitch, tag.sweep_rad, tag.lambda, tag.direction, tag.end_on_subject);
    case Movement::Pan:
      return gen_tilt_pan(s, f, RotationAxis::Yaw, tag.sweep_rad, tag.lambda, tag.direction, tag.end_on_subject);
    case Movement::Dolly: return gen_dolly_pedestal(s, f, TranslationAxis::Horizontal, tag.displacement, tag.lambda);
    case Movement::Pedestal:
      return gen_dolly_pedestal(s, f, TranslationAxis::Vertical, tag.displacement, tag.lambda);
    case Movement::Arc: return gen_arc(s, f, tag.sweep_rad, tag.lambda, tag.direction);
  }
  throw Error(ErrorCode::Domain, "regenerate: unknown movement");
}

nlohmann::json to_json(const CameraGridConfig& c)
{
  return {{"azimuth_count", c.azimuth_count},   {"lambdas", c.lambdas},
          {"push_mu", c.push_mu},               {"pull_mu", c.pull_mu},
          {"zoom_in_mu", c.zoom_in_mu},         {"zoom_out_mu", c.zoom_out_mu},
          {"tilt_pan_sweep_deg", c.tilt_pan_sweep_deg}, {"arc_sweep_deg", c.arc_sweep_deg},
          {"dolly_m", c.dolly_m},               {"pedestal_m", c.pedestal_m},
          {"focal_mm", c.focal_mm},             {"aim_fraction", c.aim_fraction}};
}

CameraGridConfig camera_grid_from_json(const nlohmann::json& j)
{
  CameraGridConfig c;
  try {
    c.azimuth_count = j.value("azimuth_count", c.azimuth_count);
    c.lambdas = j.value("lambdas", c.lambdas);
    c.push_mu = j.value("push_mu", c.push_mu);
    c.pull_mu = j.value("pull_mu", c.pull_mu);
    c.zoom_in_mu = j.value("zoom_in_mu", c.zoom_in_mu);
    c.zoom_out_mu = j.value("zoom_out_mu", c.zoom_out_mu);
    c.tilt_pan_sweep_deg = j.value("tilt_pan_sweep_deg", c.tilt_pan_sweep_deg);
    c.arc_sweep_deg = j.value("arc_sweep_deg", c.arc_sweep_deg);
    c.dolly_m = j.value("dolly_m", c.dolly_m);
    c.pedestal_m = j.value("pedestal_m", c.pedestal_m);
    c.focal_mm = j.value("focal_mm", c.focal_mm);
    c.aim_fraction = j.value("aim_fraction", c.aim_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("camera grid: ") + e.what());
  }
  if (c.azimuth_count < 1) throw Error(ErrorCode::Schema, "camera grid: azimuth_count must be >= 1");
  return c;
}

std::vector<CameraTrajectory> enumerate_camera_proposals(const CameraScript& cs, const StoryParams& s,
                                                         const CameraGridConfig& cfg)
{
  std::vector<CameraTrajectory> out;
  std::set<std::string> seen;
  auto add = [&](auto&& make) {
    try {
      CameraTrajectory c = make();
      if (seen.insert(tag_to_json(c.tag).dump()).second) out.push_back(std::move(c));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Domain) throw;
    }
  };
  const double base = base_facing(s);

  for (int k = 0; k < cfg.azimuth_count; ++k) {
    Framing f;
    f.scale = cs.scale;
    f.angle = cs.angle;
    f.azimuth_rad = wrap_angle(kTwoPi * k / cfg.azimuth_count);
    f.focal_mm = cfg.focal_mm;
    f.aim_fraction = cfg.aim_fraction;

    switch (cs.movement) {
      case Movement::Static:
        for (auto ref : {Reference::Start, Reference::End}) add([&] { return gen_static(s, f, ref); });
        break;
      case Movement::Follow:
        for (double l : cfg.lambdas) add([&] { return gen_follow(s, f, l); });
        break;
      case Movement::Push:
      case Movement::Pull:
        for (double l : cfg.lambdas)
          for (double mu : cs.movement == Movement::Push ? cfg.push_mu : cfg.pull_mu)
            for (auto ref : {Reference::Start, Reference::End})
              add([&] { return gen_push_pull(s, f, mu, l, ref); });
        break;
      case Movement::ZoomIn:
      case Movement::ZoomOut:
        for (double l : cfg.lambdas)
          for (double mu : cs.movement == Movement::ZoomIn ? cfg.zoom_in_mu : cfg.zoom_out_mu)
            add([&] { return gen_zoom(s, f, mu, l); });
        break;
      case Movement::Tilt:
      case Movement::Pan: {
        const auto axis = cs.movement == Movement::Tilt ? RotationAxis::Pitch : RotationAxis::Yaw;
        for (double l : cfg.lambdas)
          for (double sw : cfg.tilt_pan_sweep_deg)
            for (int dir : {1, -1})
              for (bool end_on : {false, true})
                add([&] { return gen_tilt_pan(s, f, axis, deg_to_rad(sw), l, dir, end_on); });
        break;
      }
      case Movement::Dolly: {
        // Lateral track, perpendicular to the line from subject to camera.
        const double phi = base + f.azimuth_rad;
        const Vec3 lateral(-std::sin(phi), std::cos(phi), 0.0);
        for (double l : cfg.lambdas)
          for (double d : cfg.dolly_m)
            for (int dir : {1, -1})
              add([&] { return gen_dolly_pedestal(s, f, TranslationAxis::Horizontal, dir * d * lateral, l); });
        break;
      }
      case Movement::Pedestal:
        for (double l : cfg.lambdas)
          for (double d : cfg.pedestal_m)
            for (int dir : {1, -1})
              add([&] { return gen_dolly_pedestal(s, f, TranslationAxis::Vertical, Vec3(0, 0, dir * d), l); });
        break;
      case Movement::Arc:
        for (double l : cfg.lambdas)
          for (double sw : cfg.arc_sweep_deg)
            for (int dir : {1, -1}) add([&] { return gen_arc(s, f, deg_to_rad(sw), l, dir); });
        break;
    }
  }
  return out;
}

void write_trajectory(std::ostream& out, const CameraTrajectory& c)
{
  out << "# previs-trajectory v1\n";
  out << "# tag " << tag_to_json(c.tag).dump() << "\n";
  if (c.negative) out << "# negative " << (c.source_id.empty() ? "-" : c.source_id) << "\n";
  out << "# frame x y z roll pitch yaw focal_mm\n";
  char buf[512];
  for (int t = 0; t < c.frames(); ++t) {
    const auto& p = c.poses[t];
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", t, p.position.x(),
                  p.position.y(), p.position.z(), p.rotation.roll, p.rotation.pitch, p.rotation.yaw, p.focal_mm);
    out << buf;
  }
}

CameraTrajectory read_trajectory(std::istream& in)
{
  CameraTrajectory c;
  std::string line;
  bool header = false;
  int expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# previs-trajectory ", 0) == 0) {
        if (line != "# previs-trajectory v1")
          throw Error(ErrorCode::VersionMismatch, "trajectory: unsupported version '" + line.substr(2) + "'");
        header = true;
      } else if (line.rfind("# tag ", 0) == 0) {
        try {
          c.tag = tag_from_json(nlohmann::json::parse(line.substr(6)));
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::Schema, std::string("trajectory tag: ") + e.what());
        }
      } else if (line.rfind("# negative ", 0) == 0) {
        c.negative = true;
        c.source_id = line.substr(11);
        if (c.source_id == "-") c.source_id.clear();
      }
      continue;
    }
    if (!header) throw Error(ErrorCode::Schema, "trajectory: missing header");
    std::istringstream row(line);
    int frame = 0;
    CameraPose p;
    double x, y, z;
    if (!(row >> frame >> x >> y >> z >> p.rotation.roll >> p.rotation.pitch >> p.rotation.yaw >> p.focal_mm))
      throw Error(ErrorCode::Schema, "trajectory: malformed row '" + line + "'");
    if (frame != expected) throw Error(ErrorCode::Schema, "trajectory: frames must be consecutive from 0");
    p.position = Vec3(x, y, z);
    c.poses.push_back(p);
    ++expected;
  }
  if (!header) throw Error(ErrorCode::Schema, "trajectory: missing header");
  return c;
}

}  // namespace previs
