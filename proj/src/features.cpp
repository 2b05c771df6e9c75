#include "previs/features.hpp"

#include "previs/error.hpp"

#include <algorithm>
#include <cmath>

namespace previs {

Eigen::VectorXd luminance_grid(const Frame& frame, int grid)
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid) * grid);
  for (int gy = 0; gy < grid; ++gy) {
    const int y0 = gy * frame.height / grid, y1 = std::max(y0 + 1, (gy + 1) * frame.height / grid);
    for (int gx = 0; gx < grid; ++gx) {
      const int x0 = gx * frame.width / grid, x1 = std::max(x0 + 1, (gx + 1) * frame.width / grid);
      double acc = 0.0;
      int n = 0;
      for (int y = y0; y < std::min(y1, frame.height); ++y)
        for (int x = x0; x < std::min(x1, frame.width); ++x, ++n) {
          const std::uint8_t* px = &frame.rgb[(static_cast<std::size_t>(y) * frame.width + x) * 3];
          acc += 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        }
      out[gy * grid + gx] = n ? acc / (255.0 * n) : 0.0;
    }
  }
  return out;
}

Eigen::RowVectorXd frame_features(const SceneMesh& mesh, const ShotProposal& p, int t, const FeatureConfig& cfg)
{
  const Frame f = render_shot_frame(mesh, p, t, cfg.preview);
  Eigen::RowVectorXd row(cfg.dim());
  row.head(cfg.grid * cfg.grid) = luminance_grid(f, cfg.grid).transpose();
  const double fill = p.metrics.fill_ratio.empty() ? 0.0 : p.metrics.fill_ratio[t];
  row[cfg.grid * cfg.grid] = std::log(std::min(fill, 100.0) + 1e-3);
  row[cfg.grid * cfg.grid + 1] = p.metrics.center_offset.empty() ? 0.0 : p.metrics.center_offset[t];
  const auto& poses = p.camera.poses;
  row[cfg.grid * cfg.grid + 2] = t > 0 ? (poses[t].position - poses[t - 1].position).norm() : 0.0;
  return row;
}

std::vector<int> view_indices(int T, int k, bool offset)
{
  if (T < 1 || k < 1) throw Error(ErrorCode::Domain, "view_indices: empty shot");
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) {
    const long long num = offset ? static_cast<long long>(i) * T : static_cast<long long>(2 * i + 1) * T;
    const long long den = offset ? k : 2LL * k;
    idx[i] = static_cast<int>(num / den);
  }
  return idx;
}

ShotFeatures extract_features(const SceneMesh& mesh, const ShotProposal& p, const FeatureConfig& cfg,
                              bool with_view_b)
{
  const int T = p.frames();
  ShotFeatures out;
  out.overlapping = T < 2 * cfg.frames;
  out.view_a.resize(cfg.frames, cfg.dim());
  const auto a = view_indices(T, cfg.frames, false);
  for (int i = 0; i < cfg.frames; ++i) out.view_a.row(i) = frame_features(mesh, p, a[i], cfg);
  if (with_view_b) {
    out.view_b.resize(cfg.frames, cfg.dim());
    const auto b = view_indices(T, cfg.frames, true);
    for (int i = 0; i < cfg.frames; ++i) out.view_b.row(i) = frame_features(mesh, p, b[i], cfg);
  }
  return out;
}

}  // namespace previs
