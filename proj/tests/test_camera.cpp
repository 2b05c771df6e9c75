#include "previs/camera.hpp"
#include "previs/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace previs;

namespace {

StoryParams story_along(const Vec3& from, const Vec3& to, int T, double h = 1.6)
{
  StoryParams s;
  s.character_id = "Anna";
  s.height_m = h;
  s.clip.duration_frames = T;
  for (int t = 0; t < T; ++t) s.path.waypoints.push_back(from + (to - from) * (static_cast<double>(t) / (T - 1)));
  return s;
}

StoryParams standing(const Vec3& at, int T, double facing = 0.0)
{
  StoryParams s;
  s.character_id = "Anna";
  s.clip.duration_frames = T;
  s.path.waypoints.assign(T, at);
  s.rest_facing_rad = facing;
  return s;
}

double angle_between(const Vec3& a, const Vec3& b)
{
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

void check_look_at(const CameraTrajectory& c, const StoryParams& s)
{
  for (int t = 0; t < c.frames(); ++t) {
    const auto& p = c.poses[t];
    CHECK(p.rotation.roll == 0.0);
    CHECK(angle_between(forward_axis(p.rotation), aim_point(s, t, c.tag.aim_fraction) - p.position) < 1e-6);
  }
}

}  // namespace

TEST_CASE("spherical_to_world examples")
{
  const Vec3 a = spherical_to_world(Vec3::Zero(), {1.0, kPi / 2, 0.0});
  CHECK((a - Vec3(1, 0, 0)).norm() < 1e-12);
  const Vec3 pole = spherical_to_world(Vec3::Zero(), {1.0, 1e-12, 0.0});
  CHECK((pole - Vec3(0, 0, 1)).norm() < 1e-9);

  const double r = 0.8, th = 2 * kPi / 5, ph = kPi / 4;
  const Vec3 oracle(3 + r * std::cos(ph) * std::sin(th), 1 + r * std::sin(ph) * std::sin(th), r * std::cos(th));
  const Vec3 p = spherical_to_world({3, 1, 0}, {r, th, ph});
  CHECK((p - oracle).norm() < 1e-12);
  CHECK(p.x() == doctest::Approx(3.538).epsilon(1e-3));
  CHECK(p.y() == doctest::Approx(1.538).epsilon(1e-3));
  CHECK(p.z() == doctest::Approx(0.247).epsilon(1e-3));
}

TEST_CASE("spherical round trip")
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(0.1, 10.0), ut(0.01, kPi - 0.01), up(-kPi, kPi), uc(-20, 20);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 target(uc(rng), uc(rng), uc(rng));
    const SphericalOffset o{ur(rng), ut(rng), up(rng)};
    const Vec3 w = spherical_to_world(target, o);
    const SphericalOffset back = world_to_spherical(target, w);
    CHECK((spherical_to_world(target, back) - w).norm() < 1e-9);
    CHECK(back.r == doctest::Approx(o.r).epsilon(1e-12));
  }
}

TEST_CASE("look_at examples")
{
  const Rotation a = look_at({1, 0, 0}, Vec3::Zero());
  CHECK(std::abs(std::abs(a.yaw) - kPi) < 1e-12);
  CHECK(a.pitch == 0.0);
  CHECK(a.roll == 0.0);

  const Rotation b = look_at({0, 0, 1}, Vec3::Zero());
  CHECK(b.pitch == doctest::Approx(-kPi / 2));
  CHECK(b.yaw == 0.0);
  CHECK((forward_axis(b) - Vec3(0, 0, -1)).norm() < 1e-12);

  const Vec3 cam = spherical_to_world({3, 1, 0}, {0.8, 2 * kPi / 5, kPi / 4});
  const Vec3 head(3, 1, 0.8 * 1.6 * 0.875);
  const Vec3 dir = (head - cam).normalized();
  CHECK(forward_axis(look_at(cam, head)).dot(dir) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(look_at({1, 2, 3}, {1, 2, 3}), Error);
}

TEST_CASE("camera basis is right-handed and orthonormal")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5), y(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const Rotation r{0.0, u(rng), y(rng)};
    const CameraBasis b = camera_basis(r);
    CHECK(b.right.norm() == doctest::Approx(1.0));
    CHECK(b.up.norm() == doctest::Approx(1.0));
    CHECK(std::abs(b.right.dot(b.forward)) < 1e-12);
    CHECK(std::abs(b.up.dot(b.forward)) < 1e-12);
    CHECK(std::abs(b.right.z()) < 1e-12);  // level horizon
    CHECK(b.up.z() >= 0.0);
  }
}

TEST_CASE("easing")
{
  for (double l : {0.1, 1.0, 10.0, 3.7}) {
    CHECK(easing(l, 0.0) == 0.0);
    CHECK(easing(l, 1.0) == 1.0);
  }
  CHECK(easing(1.0, 0.37) == 0.37);
  CHECK(easing(10.0, 0.5) == doctest::Approx((std::sqrt(10.0) - 1) / 9).epsilon(1e-12));
  CHECK(easing(10.0, 0.5) == doctest::Approx(0.24027).epsilon(1e-4));
  // Near lambda = 1 the gap to the identity is about |ln lambda| t (1 - t) / 2.
  for (double l : {1 - 1e-4, 1 + 1e-4, 1 - 1e-9, 1 + 1e-9})
    for (double t = 0; t <= 1.0; t += 0.05)
      CHECK(std::abs(easing(l, t) - t) <= 1.001 * std::abs(std::log(l)) * t * (1 - t) / 2 + 1e-15);
  CHECK(std::abs(easing(1 + 1e-9, 0.5) - 0.5) < 1e-6);
  for (double l : {0.01, 0.1, 0.999, 2.0, 10.0, 100.0}) {
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
      const double v = easing(l, i / 100.0);
      CHECK(v > prev);
      prev = v;
    }
  }
  CHECK_THROWS_AS(easing(0.0, 0.5), Error);
  CHECK_THROWS_AS(easing(-1.0, 0.5), Error);
  CHECK_THROWS_AS(easing(2.0, 1.5), Error);
  CHECK_THROWS_AS(easing(2.0, -0.1), Error);
}

TEST_CASE("static shots")
{
  const StoryParams s = story_along({0, 0, 0}, {3, 0, 0}, 40);
  Framing f;
  const auto a = gen_static(s, f, Reference::Start);
  const auto b = gen_static(s, f, Reference::End);
  REQUIRE(a.frames() == 40);
  for (const auto& p : a.poses) CHECK(p == a.poses.front());
  CHECK((a.poses[0].position - b.poses[0].position).norm() > 1.0);

  // Eye level medium at h = 1.6: r = 0.8 and the camera sits at aim height.
  CHECK(a.tag.radius_m == doctest::Approx(0.8));
  CHECK((a.poses[0].position - aim_point(s, 0, f.aim_fraction)).norm() == doctest::Approx(0.8));
  CHECK(a.poses[0].position.z() == doctest::Approx(aim_point(s, 0, f.aim_fraction).z()));
  CHECK(a.poses[0].rotation.pitch == doctest::Approx(0.0));
}

TEST_CASE("follow shots")
{
  const StoryParams s = story_along({0, 0, 0}, {4, 0, 0}, 50);
  Framing f;
  f.azimuth_rad = kPi / 3;
  const auto c = gen_follow(s, f, 1.0);
  const Vec3 off = c.poses[0].position - s.path.waypoints[0];
  for (int t = 0; t < c.frames(); ++t) CHECK((c.poses[t].position - s.path.waypoints[t] - off).norm() < 1e-9);
  check_look_at(c, s);

  // Slow first: by the midpoint the camera covers less than half the route.
  const auto slow = gen_follow(s, f, 10.0);
  const double total = (slow.poses.back().position - slow.poses.front().position).norm();
  const double half = (slow.poses[25].position - slow.poses.front().position).norm();
  CHECK(half < 0.5 * total);
  check_look_at(slow, s);
}

TEST_CASE("push and pull")
{
  const StoryParams s = standing({1, 2, 0}, 30);
  Framing f;
  const Vec3 anchor = aim_point(s, 0, f.aim_fraction);

  const auto same = gen_push_pull(s, f, 1.0, 10.0, Reference::Start);
  const auto st = gen_static(s, f, Reference::Start);
  for (int t = 0; t < 30; ++t) CHECK(same.poses[t] == st.poses[t]);

  const auto push = gen_push_pull(s, f, 0.5, 1.0, Reference::Start);
  CHECK(push.tag.movement == Movement::Push);
  const double r0 = push.tag.radius_m;
  for (int t = 0; t < 30; ++t) {
    const double expect = (1.0 - 0.5 * t / 29.0) * r0;
    CHECK((push.poses[t].position - anchor).norm() == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK((push.poses.back().position - anchor).norm() == doctest::Approx(0.5 * r0).epsilon(1e-12));

  const auto pull = gen_push_pull(s, f, 1.2, 10.0, Reference::Start);
  CHECK(pull.tag.movement == Movement::Pull);
  double prev = 0.0;
  for (const auto& p : pull.poses) {
    const double r = (p.position - anchor).norm();
    CHECK(r > prev);
    prev = r;
  }
  CHECK(std::abs(prev / r0 - 1.2) < 1e-9);
  check_look_at(pull, s);
  CHECK_THROWS_AS(gen_push_pull(s, f, 0.0, 1.0, Reference::Start), Error);
}

TEST_CASE("zoom")
{
  const StoryParams s = standing({0, 0, 0}, 20);
  Framing f;
  const auto z = gen_zoom(s, f, 1.2, 1.0);
  CHECK(z.tag.movement == Movement::ZoomIn);
  CHECK(z.poses.back().focal_mm == doctest::Approx(60.0).epsilon(1e-12));
  CHECK_FALSE(z.tag.focal_clamped);
  for (const auto& p : z.poses) {
    CHECK(p.position == z.poses[0].position);
    CHECK(p.rotation == z.poses[0].rotation);
  }

  f.focal_mm = 70.0;
  const auto c = gen_zoom(s, f, 1.2, 1.0);
  CHECK(c.poses.back().focal_mm == 80.0);
  CHECK(c.tag.focal_clamped);

  f.focal_mm = 50.0;
  const auto flat = gen_zoom(s, f, 1.0, 10.0);
  const auto st = gen_static(s, f, Reference::Start);
  for (int t = 0; t < 20; ++t) CHECK(flat.poses[t] == st.poses[t]);
  CHECK(gen_zoom(s, f, 0.9, 1.0).tag.movement == Movement::ZoomOut);
}

TEST_CASE("tilt and pan")
{
  const StoryParams s = standing({0, 0, 0}, 31);
  Framing f;
  const auto pan = gen_tilt_pan(s, f, RotationAxis::Yaw, deg_to_rad(45), 1.0, 1, true);
  const Rotation on = look_at(pan.poses[0].position, aim_point(s, 30, f.aim_fraction));
  CHECK(wrap_angle(pan.poses.back().rotation.yaw - on.yaw) == doctest::Approx(0.0));
  for (int t = 0; t < 31; ++t) {
    const double expect = on.yaw + deg_to_rad(45) * (t / 30.0 - 1.0);
    CHECK(std::abs(wrap_angle(pan.poses[t].rotation.yaw - expect)) < 1e-12);
    CHECK(pan.poses[t].rotation.pitch == on.pitch);
    CHECK(pan.poses[t].position == pan.poses[0].position);
  }

  const auto tilt = gen_tilt_pan(s, f, RotationAxis::Pitch, deg_to_rad(30), 1.0, 1, false);
  const Rotation start = look_at(tilt.poses[0].position, aim_point(s, 0, f.aim_fraction));
  CHECK(tilt.poses[0].rotation.pitch == doctest::Approx(start.pitch));
  CHECK(tilt.poses.back().rotation.pitch == doctest::Approx(start.pitch + deg_to_rad(30)));
  for (const auto& p : tilt.poses) CHECK(p.rotation.yaw == start.yaw);

  CHECK_THROWS_AS(gen_tilt_pan(s, f, RotationAxis::Yaw, 0.0, 1.0, 1, false), Error);
  CHECK_THROWS_AS(gen_tilt_pan(s, f, RotationAxis::Yaw, deg_to_rad(61), 1.0, 1, false), Error);
  CHECK_THROWS_AS(gen_tilt_pan(s, f, RotationAxis::Yaw, deg_to_rad(45), 1.0, 0, false), Error);
}

TEST_CASE("dolly and pedestal")
{
  const StoryParams s = standing({0, 0, 0}, 21);
  Framing f;
  const auto zero = gen_dolly_pedestal(s, f, TranslationAxis::Horizontal, Vec3::Zero(), 1.0);
  const auto st = gen_static(s, f, Reference::Start);
  for (int t = 0; t < 21; ++t) CHECK((zero.poses[t].position - st.poses[t].position).norm() < 1e-12);

  const auto d = gen_dolly_pedestal(s, f, TranslationAxis::Horizontal, {2, 0, 0}, 1.0);
  for (int t = 1; t < 21; ++t) {
    CHECK(d.poses[t].position.x() - d.poses[t - 1].position.x() == doctest::Approx(2.0 / 20));
    CHECK(d.poses[t].position.z() == d.poses[0].position.z());
  }
  check_look_at(d, s);

  const auto p = gen_dolly_pedestal(s, f, TranslationAxis::Vertical, {0, 0, 1}, 0.1);
  const double rise = p.poses[10].position.z() - p.poses[0].position.z();
  CHECK(rise > 0.5);
  CHECK(p.poses.back().position.z() - p.poses[0].position.z() == doctest::Approx(1.0));
  check_look_at(p, s);

  CHECK_THROWS_AS(gen_dolly_pedestal(s, f, TranslationAxis::Horizontal, {1, 0, 0.5}, 1.0), Error);
  CHECK_THROWS_AS(gen_dolly_pedestal(s, f, TranslationAxis::Vertical, {0.5, 0, 1}, 1.0), Error);
}

TEST_CASE("arc")
{
  const StoryParams s = standing({1, -1, 0}, 41);
  Framing f;
  f.azimuth_rad = kPi / 4;
  const auto ccw = gen_arc(s, f, kPi / 2, 1.0, 1);
  const auto cw = gen_arc(s, f, kPi / 2, 1.0, -1);
  const Vec3 aim = aim_point(s, 0, f.aim_fraction);
  const double phi0 = world_to_spherical(aim, ccw.poses[0].position).phi;
  for (int t = 0; t < 41; ++t) {
    CHECK(std::abs((ccw.poses[t].position - aim).norm() - ccw.tag.radius_m) < 1e-9);
    const double phi = world_to_spherical(aim, ccw.poses[t].position).phi;
    CHECK(std::abs(wrap_angle(phi - phi0 - kPi / 2 * t / 40.0)) < 1e-9);

    // Mirror through the vertical plane at the start azimuth.
    const Vec3 n(-std::sin(phi0), std::cos(phi0), 0.0);
    const Vec3 d = ccw.poses[t].position - aim;
    const Vec3 mirrored = aim + d - 2 * d.dot(n) * n;
    CHECK((mirrored - cw.poses[t].position).norm() < 1e-9);
  }
  check_look_at(ccw, s);
  CHECK_FALSE(ccw.tag.moving_subject);
  CHECK(gen_arc(story_along({0, 0, 0}, {2, 0, 0}, 20), f, kPi / 2, 1.0, 1).tag.moving_subject);
  CHECK_THROWS_AS(gen_arc(s, f, deg_to_rad(45), 1.0, 1), Error);
}

TEST_CASE("enumeration counts")
{
  const StoryParams still = standing({0, 0, 0}, 60);
  const StoryParams moving = story_along({0, 0, 0}, {3, 1, 0}, 60);
  auto count = [](Movement m, const StoryParams& s) {
    return enumerate_camera_proposals({m, ShotScale::Medium, ShotAngle::EyeLevel}, s).size();
  };
  CHECK(count(Movement::Static, moving) == 16);
  CHECK(count(Movement::Follow, moving) == 24);
  CHECK(count(Movement::Arc, still) == 96);
  CHECK(count(Movement::Dolly, still) == 96);
  CHECK(count(Movement::Pedestal, still) == 96);
  CHECK(count(Movement::Pan, still) == 192);
  CHECK(count(Movement::Tilt, still) <= 192);
  // Push keeps every (mu, reference) pair; pull mu = 1 collapses lambda and reference.
  CHECK(count(Movement::Push, moving) == 8 * 3 * 3 * 2);
  CHECK(count(Movement::Pull, moving) == 8 * (1 * 2 + 3 * 2 * 2));
  CHECK(count(Movement::ZoomIn, still) == 72);

  // Static on a standing character: start and end references coincide in pose but not in tag.
  const auto props = enumerate_camera_proposals({Movement::Static, ShotScale::CloseUp, ShotAngle::Low}, still);
  std::set<std::string> tags;
  for (const auto& c : props) {
    tags.insert(tag_to_json(c.tag).dump());
    CHECK(c.tag.movement == Movement::Static);
    CHECK(c.tag.scale == ShotScale::CloseUp);
    CHECK(c.tag.angle == ShotAngle::Low);
  }
  CHECK(tags.size() == props.size());
}

TEST_CASE("enumerated proposals satisfy invariants")
{
  const StoryParams moving = story_along({0, 0, 0}, {3, 1, 0}, 50);
  for (Movement m : kAllMovements)
    for (ShotScale sc : kAllScales)
      for (ShotAngle a : kAllAngles) {
        const auto props = enumerate_camera_proposals({m, sc, a}, moving);
        CHECK(!props.empty());
        for (const auto& c : props) {
          CHECK(c.frames() == 50);
          CHECK(c.tag.movement == m);
          for (const auto& p : c.poses) {
            CHECK(p.focal_mm >= kMinFocalMm);
            CHECK(p.focal_mm <= kMaxFocalMm);
            CHECK(p.rotation.roll == 0.0);
            CHECK(p.rotation.pitch >= -kPi / 2 - 1e-9);
            CHECK(p.rotation.pitch <= kPi / 2 + 1e-9);
          }
          // These movements track the live subject; the rest hold a fixed anchor or rotate freely.
          if (m == Movement::Follow || m == Movement::Dolly || m == Movement::Pedestal || m == Movement::Arc)
            check_look_at(c, moving);
        }
      }
}

TEST_CASE("regenerate reproduces every enumerated trajectory")
{
  const StoryParams s = story_along({-1, 0, 0}, {2, 2, 0}, 35);
  for (Movement m : kAllMovements)
    for (const auto& c : enumerate_camera_proposals({m, ShotScale::Full, ShotAngle::High}, s)) {
      const auto r = regenerate(c.tag, s);
      REQUIRE(r.frames() == c.frames());
      for (int t = 0; t < c.frames(); ++t) CHECK(r.poses[t] == c.poses[t]);
      CHECK(tag_from_json(tag_to_json(c.tag)) == c.tag);
    }
}

TEST_CASE("trajectory text round trip")
{
  const StoryParams s = story_along({0, 0, 0}, {2, 1, 0}, 25);
  Framing f;
  f.azimuth_rad = 1.234567890123;
  const auto c = gen_arc(s, f, deg_to_rad(100), 10.0, -1);
  std::stringstream ss;
  write_trajectory(ss, c);
  CHECK(ss.str().front() == '#');
  const auto back = read_trajectory(ss);
  REQUIRE(back.frames() == c.frames());
  for (int t = 0; t < c.frames(); ++t) CHECK(back.poses[t] == c.poses[t]);
  CHECK(back.tag == c.tag);

  std::istringstream bad("# nothing\n0 1 2\n");
  CHECK_THROWS(read_trajectory(bad));
}
