#include "previs/grid.hpp"

#include "previs/error.hpp"
#include "previs/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace previs {

namespace {

constexpr double kQuantEps = 1e-9;

// Closed segment vs closed axis-aligned square (slab clipping).
bool segment_touches_box(const Vec2& a, const Vec2& b, const Vec2& lo, const Vec2& hi)
{
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec2 d = b - a;
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (a[axis] < lo[axis] || a[axis] > hi[axis]) return false;
      continue;
    }
    double ta = (lo[axis] - a[axis]) / d[axis];
    double tb = (hi[axis] - a[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

OccupancyGrid::OccupancyGrid(double cell_size_m, Vec2 origin, int nx, int ny)
    : cell_size_(cell_size_m), origin_(std::move(origin)), nx_(nx), ny_(ny)
{
  if (!(cell_size_m > 0.0)) throw Error(ErrorCode::Domain, "grid: cell size must be > 0");
  if (nx <= 0 || ny <= 0) throw Error(ErrorCode::Domain, "grid: empty extent");
  blocked_.assign(static_cast<std::size_t>(nx) * ny, 0);
}

Cell OccupancyGrid::cell_of(const Vec2& p) const
{
  const Vec2 q = (p - origin_) / cell_size_;
  return {static_cast<int>(std::floor(q.x() + kQuantEps)), static_cast<int>(std::floor(q.y() + kQuantEps))};
}

Vec2 OccupancyGrid::center(Cell c) const
{
  return origin_ + cell_size_ * Vec2(c.ix + 0.5, c.iy + 0.5);
}

bool OccupancyGrid::cell_range(const Vec2& lo, const Vec2& hi, Cell& first, Cell& last) const
{
  const Vec2 a = (lo - origin_) / cell_size_;
  const Vec2 b = (hi - origin_) / cell_size_;
  first = {static_cast<int>(std::floor(a.x() + kQuantEps)), static_cast<int>(std::floor(a.y() + kQuantEps))};
  last = {static_cast<int>(std::ceil(b.x() - kQuantEps)) - 1, static_cast<int>(std::ceil(b.y() - kQuantEps)) - 1};
  // A degenerate box still covers the cell it sits in.
  last.ix = std::max(last.ix, first.ix);
  last.iy = std::max(last.iy, first.iy);
  if (last.ix < 0 || last.iy < 0 || first.ix >= nx_ || first.iy >= ny_) return false;
  first.ix = std::max(first.ix, 0);
  first.iy = std::max(first.iy, 0);
  last.ix = std::min(last.ix, nx_ - 1);
  last.iy = std::min(last.iy, ny_ - 1);
  return true;
}

std::vector<Cell> OccupancyGrid::segment_cells(const Vec2& a, const Vec2& b) const
{
  // Row by row: clip the segment to each row's slab, then test the few
  // candidate cells around the clipped x-interval exactly.
  std::vector<Cell> out;
  const Cell ca = cell_of(a);
  const Cell cb = cell_of(b);
  const int row0 = std::min(ca.iy, cb.iy) - 1;
  const int row1 = std::max(ca.iy, cb.iy) + 1;
  for (int iy = row0; iy <= row1; ++iy) {
    const double ylo = origin_.y() + cell_size_ * iy;
    const double yhi = ylo + cell_size_;
    double xa, xb;
    const double dy = b.y() - a.y();
    if (std::abs(dy) < 1e-15) {
      if (a.y() < ylo || a.y() > yhi) continue;
      xa = std::min(a.x(), b.x());
      xb = std::max(a.x(), b.x());
    } else {
      double t0 = (ylo - a.y()) / dy;
      double t1 = (yhi - a.y()) / dy;
      if (t0 > t1) std::swap(t0, t1);
      t0 = std::max(t0, 0.0);
      t1 = std::min(t1, 1.0);
      if (t0 > t1) continue;
      const double x0 = a.x() + t0 * (b.x() - a.x());
      const double x1 = a.x() + t1 * (b.x() - a.x());
      xa = std::min(x0, x1);
      xb = std::max(x0, x1);
    }
    const int ix0 = static_cast<int>(std::floor((xa - origin_.x()) / cell_size_)) - 1;
    const int ix1 = static_cast<int>(std::floor((xb - origin_.x()) / cell_size_)) + 1;
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 clo = origin_ + cell_size_ * Vec2(ix, iy);
      const Vec2 chi = clo + Vec2::Constant(cell_size_);
      if (segment_touches_box(a, b, clo, chi)) out.push_back({ix, iy});
    }
  }
  return out;
}

OccupancyGrid build_grid(const SceneGraph& scene, double cell_size_m, double capsule_radius_m)
{
  if (!(cell_size_m > 0.0)) throw Error(ErrorCode::Domain, "grid: cell size must be > 0");

  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  bool any_room = false;
  for (const auto& n : scene.nodes()) {
    if (n.kind != NodeKind::Room) continue;
    const Vec3 w = scene.world_position(n.id);
    lo = lo.cwiseMin(Vec2(w.x() - n.half_extents.x(), w.y() - n.half_extents.y()));
    hi = hi.cwiseMax(Vec2(w.x() + n.half_extents.x(), w.y() + n.half_extents.y()));
    any_room = true;
  }
  if (!any_room) {
    const auto& r = scene.root();
    const Vec3 w = scene.world_position(r.id);
    lo = Vec2(w.x() - r.half_extents.x(), w.y() - r.half_extents.y());
    hi = Vec2(w.x() + r.half_extents.x(), w.y() + r.half_extents.y());
  }
  if (!((hi - lo).array() > 0.0).all())
    throw Error(ErrorCode::Schema, "grid: scene has no floor extent (rooms or root half_extents)");

  const int nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell_size_m - kQuantEps)));
  const int ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell_size_m - kQuantEps)));
  OccupancyGrid grid(cell_size_m, lo, nx, ny);

  for (const auto& n : scene.nodes()) {
    if (n.kind != NodeKind::Object) continue;
    for (const Cell& c : footprint_cells(grid, scene, n.id, capsule_radius_m)) grid.set_blocked(c, true);
  }
  return grid;
}

std::vector<Cell> footprint_cells(const OccupancyGrid& grid, const SceneGraph& scene,
                                  std::string_view node_id, double capsule_radius_m)
{
  const SceneNode* n = scene.find(node_id);
  if (!n) throw Error(ErrorCode::UnknownTarget, "unknown target '" + std::string(node_id) + "'");
  const Vec3 w = scene.world_position(node_id);
  const Vec2 half(n->half_extents.x() + capsule_radius_m, n->half_extents.y() + capsule_radius_m);
  const Vec2 c(w.x(), w.y());

  std::vector<Cell> out;
  Cell first, last;
  if (!grid.cell_range(c - half, c + half, first, last)) return out;
  for (int iy = first.iy; iy <= last.iy; ++iy)
    for (int ix = first.ix; ix <= last.ix; ++ix) out.push_back({ix, iy});
  return out;
}

std::vector<int> label_components(const OccupancyGrid& grid, int* count)
{
  std::vector<int> label(grid.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < grid.size(); ++start) {
    if (label[start] != -1 || grid.blocked(grid.cell_at(start))) continue;
    label[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const Cell c = grid.cell_at(stack.back());
      stack.pop_back();
      for (const Cell d : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
        const Cell nb{c.ix + d.ix, c.iy + d.iy};
        if (!grid.walkable(nb)) continue;
        const std::size_t ni = grid.index(nb);
        if (label[ni] != -1) continue;
        label[ni] = next;
        stack.push_back(ni);
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

}  // namespace previs
