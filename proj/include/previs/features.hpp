#pragma once

#include "previs/render.hpp"
#include "previs/shot.hpp"

#include <Eigen/Dense>

#include <vector>

namespace previs {

struct FeatureConfig {
  int grid = 32;                 // luminance grid side
  int frames = 8;                // sampled frames per view
  ImageSize preview = kPreviewSize;

  int dim() const { return grid * grid + 3; }
};

/// Per-frame rows: g*g luminance in [0,1], log(fill + 1e-3), center offset,
/// camera speed (m/frame, backward difference).
struct ShotFeatures {
  Eigen::MatrixXd view_a;  // frames x dim, segment midpoints
  Eigen::MatrixXd view_b;  // frames x dim, segment starts
  bool overlapping = false;  // T < 2k: the two views share frames
};

/// Area-averaged luminance grid of a frame, row-major.
Eigen::VectorXd luminance_grid(const Frame& frame, int grid);

Eigen::RowVectorXd frame_features(const SceneMesh& mesh, const ShotProposal& p, int t, const FeatureConfig& cfg);

/// Frame indices for a view; repeats frames when T < k.
std::vector<int> view_indices(int T, int k, bool offset);

ShotFeatures extract_features(const SceneMesh& mesh, const ShotProposal& p, const FeatureConfig& cfg = {},
                              bool with_view_b = true);

}  // namespace previs
