#include "previs/shot.hpp"

#include "previs/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace previs {

double center_offset(const CharacterState& st, const CameraPose& pose, ImageSize size, double aim_fraction)
{
  const Intrinsics k = make_intrinsics(pose.focal_mm, size);
  const Vec3 aim = st.position + Vec3(0, 0, st.root_height_m + aim_fraction * st.height_m);
  const auto p = project(pose, k, aim);
  if (!p) return kMaxCenterOffset;
  const double d = std::hypot(p->x() - k.cx, p->y() - k.cy) / (0.5 * size.height);
  return std::min(d, kMaxCenterOffset);
}

double camera_jerk(const std::vector<CameraPose>& poses)
{
  if (poses.size() < 4) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t + 3 < poses.size(); ++t) {
    // Nested differences so a stationary camera gives exactly zero.
    const Vec3 d0 = poses[t + 1].position - poses[t].position;
    const Vec3 d1 = poses[t + 2].position - poses[t + 1].position;
    const Vec3 d2 = poses[t + 3].position - poses[t + 2].position;
    const Vec3 j = (d2 - d1) - (d1 - d0);
    sum += j.norm();
  }
  return sum / static_cast<double>(poses.size() - 3);
}

ShotProposal simulate_shot(const StoryParams& s, const CameraTrajectory& c, ImageSize size, std::string id)
{
  if (c.frames() != s.frames() || s.path.frames() != s.frames())
    throw Error(ErrorCode::LengthMismatch, "shot: camera has " + std::to_string(c.frames()) +
                                               " poses, story has " + std::to_string(s.frames()) + " frames");
  ShotProposal p;
  p.id = std::move(id);
  p.story = s;
  p.camera = c;
  p.size = size;
  const int T = c.frames();
  p.metrics.fill_ratio.resize(T);
  p.metrics.center_offset.resize(T);
  for (int t = 0; t < T; ++t) {
    const CharacterState st = character_at(s, t);
    const FillMeasure fm = analytic_fill(st, c.poses[t], size);
    p.metrics.fill_ratio[t] = fm.valid ? fm.fill_ratio : 0.0;
    if (!fm.valid) ++p.metrics.degenerate_frames;
    p.metrics.center_offset[t] = center_offset(st, c.poses[t], size, c.tag.aim_fraction);
  }
  p.metrics.jerk = camera_jerk(c.poses);
  return p;
}

Frame render_shot_frame(const SceneMesh& mesh, const ShotProposal& p, int t, ImageSize size)
{
  if (t < 0 || t >= p.frames())
    throw Error(ErrorCode::FrameOutOfRange, "shot " + p.id + ": frame " + std::to_string(t) + " out of range");
  return render_frame(mesh, character_at(p.story, t), p.camera.poses[t], size);
}

std::vector<Frame> render_shot(const SceneMesh& mesh, const ShotProposal& p, ImageSize size)
{
  std::vector<Frame> out;
  out.reserve(p.frames());
  for (int t = 0; t < p.frames(); ++t) out.push_back(render_shot_frame(mesh, p, t, size));
  return out;
}

CameraTrajectory perturb_negative(const CameraTrajectory& c, const PerturbOptions& opts, std::uint64_t seed,
                                  const std::string& source_id)
{
  if (opts.sigma_pos_m < 0.0 || opts.sigma_rot_rad < 0.0)
    throw Error(ErrorCode::Domain, "perturb_negative: sigma must be >= 0");
  CameraTrajectory out = c;
  out.negative = true;
  out.source_id = source_id;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& pose : out.poses) {
    const double dx = n01(rng), dy = n01(rng), dz = n01(rng), dp = n01(rng), dyaw = n01(rng);
    pose.position += opts.sigma_pos_m * Vec3(dx, dy, dz);
    pose.rotation.pitch = std::clamp(pose.rotation.pitch + opts.sigma_rot_rad * dp, -kPi / 2, kPi / 2);
    pose.rotation.yaw = wrap_angle(pose.rotation.yaw + opts.sigma_rot_rad * dyaw);
  }
  return out;
}

std::vector<int> sample_frames(int T, int k)
{
  if (k < 1 || k > T) throw Error(ErrorCode::Domain, "sample_frames: need 1 <= k <= T");
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i)
    idx[i] = static_cast<int>((static_cast<long long>(2 * i + 1) * T) / (2LL * k));
  return idx;
}

std::vector<int> sample_frames_offset(int T, int k)
{
  if (k < 1 || k > T) throw Error(ErrorCode::Domain, "sample_frames: need 1 <= k <= T");
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = static_cast<int>((static_cast<long long>(i) * T) / k);
  return idx;
}

}  // namespace previs
