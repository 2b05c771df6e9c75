#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace previs {

/// World frame is right-handed, z-up, meters.
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a)
{
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

inline double deg_to_rad(double d) { return d * kPi / 180.0; }

}  // namespace previs
