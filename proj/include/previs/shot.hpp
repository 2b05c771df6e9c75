#pragma once

#include "previs/camera.hpp"
#include "previs/render.hpp"
#include "previs/story.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace previs {

struct ShotMetrics {
  std::vector<double> fill_ratio;     // per frame; 0 where the capsule is not fully in front
  std::vector<double> center_offset;  // per frame, aim point distance from center / (H/2), capped
  double jerk = 0.0;                  // mean |third difference| of camera position, m/frame^3
  int degenerate_frames = 0;          // frames with an undefined fill ratio
};

inline constexpr double kMaxCenterOffset = 10.0;

/// One (story, camera) pair. Frames are rendered on demand.
struct ShotProposal {
  std::string id;
  StoryParams story;
  CameraTrajectory camera;
  ShotMetrics metrics;
  ImageSize size;
  std::optional<double> score;

  int frames() const { return camera.frames(); }
};

double center_offset(const CharacterState& st, const CameraPose& pose, ImageSize size, double aim_fraction);
double camera_jerk(const std::vector<CameraPose>& poses);

/// Computes per-frame metrics; LengthMismatch when the trajectory and the
/// story disagree on T.
ShotProposal simulate_shot(const StoryParams& s, const CameraTrajectory& c, ImageSize size, std::string id = {});

Frame render_shot_frame(const SceneMesh& mesh, const ShotProposal& p, int t, ImageSize size);
std::vector<Frame> render_shot(const SceneMesh& mesh, const ShotProposal& p, ImageSize size);

struct PerturbOptions {
  double sigma_pos_m = 0.05;
  double sigma_rot_rad = 0.03;
};

/// Independent Gaussian noise per frame on position and on yaw/pitch; focal
/// and roll untouched. The result is marked negative with its source id.
CameraTrajectory perturb_negative(const CameraTrajectory& c, const PerturbOptions& opts, std::uint64_t seed,
                                  const std::string& source_id = {});

/// k segment-midpoint indices floor((2i+1)T/(2k)); Domain when k > T or k < 1.
std::vector<int> sample_frames(int T, int k = 8);

/// Segment-start indices floor(i*T/k): disjoint from sample_frames when T >= 2k.
std::vector<int> sample_frames_offset(int T, int k = 8);

}  // namespace previs
