#pragma once

#include "previs/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace previs {

class SceneGraph;

struct Cell {
  int ix = 0;
  int iy = 0;

  bool operator==(const Cell&) const = default;
};

/// Ground-plane walkability raster. Cell (ix, iy) covers
/// [origin.x + ix*c, origin.x + (ix+1)*c) x [origin.y + iy*c, origin.y + (iy+1)*c).
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(double cell_size_m, Vec2 origin, int nx, int ny);

  double cell_size() const { return cell_size_; }
  const Vec2& origin() const { return origin_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  bool in_bounds(Cell c) const { return c.ix >= 0 && c.iy >= 0 && c.ix < nx_ && c.iy < ny_; }
  bool blocked(Cell c) const { return blocked_[index(c)] != 0; }
  bool walkable(Cell c) const { return in_bounds(c) && !blocked(c); }
  void set_blocked(Cell c, bool b) { blocked_[index(c)] = b ? 1 : 0; }

  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.iy) * nx_ + c.ix; }
  Cell cell_at(std::size_t index) const { return {static_cast<int>(index % nx_), static_cast<int>(index / nx_)}; }
  std::size_t size() const { return blocked_.size(); }

  Cell cell_of(const Vec2& p) const;
  Cell cell_of(const Vec3& p) const { return cell_of(Vec2(p.x(), p.y())); }
  Vec2 center(Cell c) const;

  /// Cells whose closed square touches segment a-b (conservative supercover).
  std::vector<Cell> segment_cells(const Vec2& a, const Vec2& b) const;

  /// Box [lo, hi] quantized outward to cell ranges, clamped to the grid.
  /// Returns false when the box misses the grid.
  bool cell_range(const Vec2& lo, const Vec2& hi, Cell& first, Cell& last) const;

 private:
  double cell_size_ = 0.1;
  Vec2 origin_ = Vec2::Zero();
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint8_t> blocked_;
};

/// A cell is blocked iff it overlaps the ground footprint of any object node
/// inflated by `capsule_radius_m`. The grid spans the union of room footprints
/// (the scene root footprint when there are no rooms).
OccupancyGrid build_grid(const SceneGraph& scene, double cell_size_m, double capsule_radius_m);

/// Cells blocked by one node's inflated footprint.
std::vector<Cell> footprint_cells(const OccupancyGrid& grid, const SceneGraph& scene,
                                  std::string_view node_id, double capsule_radius_m);

/// 4-connected component labels of walkable cells (-1 for blocked).
std::vector<int> label_components(const OccupancyGrid& grid, int* count = nullptr);

}  // namespace previs
