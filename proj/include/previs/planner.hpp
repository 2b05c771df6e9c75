#pragma once

#include "previs/geometry.hpp"
#include "previs/grid.hpp"

#include <string_view>
#include <vector>

namespace previs {

class SceneGraph;

/// Per-frame character root positions, one waypoint per frame t in [0, T).
struct Path {
  std::vector<Vec3> waypoints;
  double frame_rate = 25.0;

  int frames() const { return static_cast<int>(waypoints.size()); }
  double length() const;
};

/// Polyline through the walkable region; vertices only, not yet timed.
using Route = std::vector<Vec3>;

struct PlannerOptions {
  double corridor_radius_m = 0.5;
  double corridor_penalty = 4.0;  // multiplicative, compounds per earlier route
  double v_max_mps = 3.0;
  double fps = 25.0;
  int searches_per_route = 3;  // search budget per requested route
};

double route_length(const Route& route);

/// Up to M pairwise-distinct routes, shortest first. Route 1 is the grid
/// shortest path (octile A*, no corner cutting) after line-of-sight pulling;
/// later routes re-search with cells near earlier routes penalized.
std::vector<Route> plan_routes(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, int M,
                               const PlannerOptions& options = {});

/// Constant-speed arc-length resampling to exactly T waypoints. Endpoints are
/// the route endpoints exactly.
Path resample_route(const Route& route, int T, double fps);

/// plan_routes followed by resampling; routes whose constant speed would
/// exceed v_max are dropped (SpeedLimit when none survive).
std::vector<Path> plan_paths(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, int M, int T,
                             const PlannerOptions& options = {});

/// Nearest walkable cell adjacent to the inflated footprint of `target_id`
/// that is reachable from `from`; ties broken by distance to `from`. The
/// returned point is that cell's center at `from`'s height.
Vec3 stand_point(const OccupancyGrid& grid, const SceneGraph& scene, std::string_view target_id,
                 const Vec3& from, double capsule_radius_m);

}  // namespace previs
