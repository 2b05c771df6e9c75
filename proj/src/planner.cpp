#include "previs/planner.hpp"

#include "previs/error.hpp"
#include "previs/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace previs {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct Neighbor {
  int dx, dy;
  double step;
};

constexpr Neighbor kNeighbors[] = {
    {1, 0, 1.0},  {-1, 0, 1.0},     {0, 1, 1.0},      {0, -1, 1.0},
    {1, 1, kSqrt2}, {1, -1, kSqrt2}, {-1, 1, kSqrt2}, {-1, -1, kSqrt2},
};

double octile(Cell a, Cell b)
{
  const double dx = std::abs(a.ix - b.ix);
  const double dy = std::abs(a.iy - b.iy);
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

// Grid A* over cell multipliers. Returns the cell chain start..goal, empty
// when the goal is unreachable.
std::vector<Cell> astar(const OccupancyGrid& grid, Cell start, Cell goal, const std::vector<double>& mult)
{
  using Entry = std::tuple<double, double, std::size_t>;  // f, h, index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::vector<double> g(grid.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> came(grid.size(), std::numeric_limits<std::size_t>::max());
  std::vector<char> closed(grid.size(), 0);

  const std::size_t si = grid.index(start);
  const std::size_t gi = grid.index(goal);
  g[si] = 0.0;
  open.emplace(octile(start, goal), octile(start, goal), si);

  while (!open.empty()) {
    const auto [f, h, i] = open.top();
    open.pop();
    if (closed[i]) continue;
    closed[i] = 1;
    if (i == gi) break;
    const Cell c = grid.cell_at(i);
    for (const auto& n : kNeighbors) {
      const Cell nb{c.ix + n.dx, c.iy + n.dy};
      if (!grid.walkable(nb)) continue;
      if (n.dx != 0 && n.dy != 0) {
        if (!grid.walkable({c.ix + n.dx, c.iy}) || !grid.walkable({c.ix, c.iy + n.dy})) continue;
      }
      const std::size_t ni = grid.index(nb);
      if (closed[ni]) continue;
      const double cand = g[i] + n.step * mult[ni];
      if (cand < g[ni]) {
        g[ni] = cand;
        came[ni] = i;
        const double hn = octile(nb, goal);
        open.emplace(cand + hn, hn, ni);
      }
    }
  }
  if (!closed[gi]) return {};

  std::vector<Cell> chain;
  for (std::size_t i = gi; i != std::numeric_limits<std::size_t>::max(); i = came[i]) {
    chain.push_back(grid.cell_at(i));
    if (i == si) break;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

bool segment_clear(const OccupancyGrid& grid, const std::vector<double>& mult, const Vec3& a, const Vec3& b,
                   double allowed)
{
  for (const Cell& c : grid.segment_cells(Vec2(a.x(), a.y()), Vec2(b.x(), b.y()))) {
    if (!grid.walkable(c)) return false;
    if (mult[grid.index(c)] > allowed) return false;
  }
  return true;
}

// Greedy line-of-sight pulling. A shortcut may only cross cells whose
// penalty does not exceed what the raw chain already paid between its ends,
// so diversity penalties survive smoothing.
Route pull_string(const OccupancyGrid& grid, const std::vector<double>& mult, const std::vector<Cell>& chain,
                  const Vec3& start, const Vec3& goal)
{
  std::vector<Vec3> raw;
  raw.reserve(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (k == 0) raw.push_back(start);
    else if (k + 1 == chain.size()) raw.push_back(goal);
    else {
      const Vec2 c = grid.center(chain[k]);
      raw.emplace_back(c.x(), c.y(), start.z());
    }
  }
  if (chain.size() == 1) raw.push_back(goal);

  Route out{raw.front()};
  std::size_t i = 0;
  while (i + 1 < raw.size()) {
    std::size_t best = i + 1;
    double allowed = std::max(mult[grid.index(chain[std::min(i, chain.size() - 1)])],
                              mult[grid.index(chain[std::min(i + 1, chain.size() - 1)])]);
    for (std::size_t j = i + 2; j < raw.size(); ++j) {
      allowed = std::max(allowed, mult[grid.index(chain[std::min(j, chain.size() - 1)])]);
      if (!segment_clear(grid, mult, raw[i], raw[j], allowed)) break;
      best = j;
    }
    out.push_back(raw[best]);
    i = best;
  }
  return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b)
{
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

void penalize_corridor(const OccupancyGrid& grid, std::vector<double>& mult, const Route& route,
                       double radius, double penalty)
{
  std::vector<char> hit(grid.size(), 0);
  for (std::size_t s = 0; s + 1 < route.size(); ++s) {
    const Vec2 a(route[s].x(), route[s].y());
    const Vec2 b(route[s + 1].x(), route[s + 1].y());
    Cell first, last;
    if (!grid.cell_range(a.cwiseMin(b) - Vec2::Constant(radius), a.cwiseMax(b) + Vec2::Constant(radius), first,
                         last))
      continue;
    for (int iy = first.iy; iy <= last.iy; ++iy)
      for (int ix = first.ix; ix <= last.ix; ++ix) {
        const Cell c{ix, iy};
        if (point_segment_distance(grid.center(c), a, b) <= radius) hit[grid.index(c)] = 1;
      }
  }
  for (std::size_t i = 0; i < hit.size(); ++i)
    if (hit[i]) mult[i] *= penalty;
}

bool same_route(const Route& a, const Route& b)
{
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if ((a[i] - b[i]).norm() > 1e-9) return false;
  return true;
}

}  // namespace

double Path::length() const
{
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
  return len;
}

double route_length(const Route& route)
{
  double len = 0.0;
  for (std::size_t i = 1; i < route.size(); ++i) len += (route[i] - route[i - 1]).norm();
  return len;
}

std::vector<Route> plan_routes(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, int M,
                               const PlannerOptions& options)
{
  if (M < 1) throw Error(ErrorCode::Domain, "plan: M must be >= 1");
  const Cell sc = grid.cell_of(start);
  const Cell gc = grid.cell_of(goal);
  if (!grid.walkable(sc)) throw Error(ErrorCode::StartBlocked, "plan: start is not in a walkable cell");
  if (!grid.walkable(gc)) throw Error(ErrorCode::GoalBlocked, "plan: goal is not in a walkable cell");

  if ((start - goal).norm() < 1e-12) return {Route{start}};

  std::vector<double> mult(grid.size(), 1.0);
  std::vector<Route> routes;
  const int budget = std::max(1, M * options.searches_per_route);
  for (int search = 0; search < budget && static_cast<int>(routes.size()) < M; ++search) {
    const auto chain = astar(grid, sc, gc, mult);
    if (chain.empty()) {
      if (routes.empty()) throw Error(ErrorCode::Unreachable, "plan: no route between start and goal");
      break;
    }
    Route route = pull_string(grid, mult, chain, start, goal);
    const bool fresh = std::none_of(routes.begin(), routes.end(), [&](const Route& r) { return same_route(r, route); });
    penalize_corridor(grid, mult, route, options.corridor_radius_m, options.corridor_penalty);
    if (fresh) routes.push_back(std::move(route));
    if (routes.size() == 1 && chain.size() <= 2) break;  // adjacent cells: nothing to diversify
  }

  std::stable_sort(routes.begin(), routes.end(),
                   [](const Route& a, const Route& b) { return route_length(a) < route_length(b); });
  return routes;
}

Path resample_route(const Route& route, int T, double fps)
{
  if (T < 1) throw Error(ErrorCode::Domain, "resample: T must be >= 1");
  if (route.empty()) throw Error(ErrorCode::Domain, "resample: empty route");

  Path path;
  path.frame_rate = fps;
  path.waypoints.reserve(T);
  const double total = route_length(route);
  if (T == 1 || total < 1e-12) {
    path.waypoints.assign(T, route.front());
    if (T > 1) path.waypoints.back() = route.back();
    return path;
  }

  std::vector<double> cum(route.size(), 0.0);
  for (std::size_t i = 1; i < route.size(); ++i) cum[i] = cum[i - 1] + (route[i] - route[i - 1]).norm();

  std::size_t seg = 0;
  for (int k = 0; k < T; ++k) {
    if (k == T - 1) {
      path.waypoints.push_back(route.back());
      break;
    }
    const double s = total * static_cast<double>(k) / static_cast<double>(T - 1);
    while (seg + 2 < route.size() && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double u = seg_len > 0.0 ? std::clamp((s - cum[seg]) / seg_len, 0.0, 1.0) : 0.0;
    path.waypoints.push_back(route[seg] + u * (route[seg + 1] - route[seg]));
  }
  return path;
}

std::vector<Path> plan_paths(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, int M, int T,
                             const PlannerOptions& options)
{
  const auto routes = plan_routes(grid, start, goal, M, options);
  const double max_step = options.v_max_mps / options.fps;
  std::vector<Path> paths;
  for (const auto& r : routes) {
    const double len = route_length(r);
    if (len > 0.0 && (T < 2 || len / (T - 1) > max_step + 1e-12)) continue;
    paths.push_back(resample_route(r, T, options.fps));
  }
  if (paths.empty())
    throw Error(ErrorCode::SpeedLimit, "plan: every route exceeds v_max for T=" + std::to_string(T));
  return paths;
}

Vec3 stand_point(const OccupancyGrid& grid, const SceneGraph& scene, std::string_view target_id, const Vec3& from,
                 double capsule_radius_m)
{
  const Vec3 target = scene.world_position(target_id);
  auto footprint = footprint_cells(grid, scene, target_id, capsule_radius_m);
  if (footprint.empty()) footprint.push_back(grid.cell_of(target));

  const Cell from_cell = grid.cell_of(from);
  if (!grid.walkable(from_cell)) throw Error(ErrorCode::StartBlocked, "stand point: start is not walkable");
  const auto labels = label_components(grid);
  const int component = labels[grid.index(from_cell)];

  // The target's own cell may already be walkable (e.g. a place marker).
  const Cell target_cell = grid.cell_of(target);
  if (grid.walkable(target_cell) && labels[grid.index(target_cell)] == component &&
      scene.find(target_id)->kind != NodeKind::Object)
    return {target.x(), target.y(), from.z()};

  std::vector<char> seen(grid.size(), 0);
  bool found = false;
  Cell best{};
  std::tuple<double, double, std::size_t> best_key{};
  for (const Cell& f : footprint) {
    for (const auto& n : kNeighbors) {
      const Cell c{f.ix + n.dx, f.iy + n.dy};
      if (!grid.walkable(c)) continue;
      const std::size_t ci = grid.index(c);
      if (seen[ci] || labels[ci] != component) continue;
      seen[ci] = 1;
      const Vec2 p = grid.center(c);
      const std::tuple key{(p - Vec2(target.x(), target.y())).norm(), (p - Vec2(from.x(), from.y())).norm(), ci};
      if (!found || key < best_key) {
        found = true;
        best = c;
        best_key = key;
      }
    }
  }
  if (!found)
    throw Error(ErrorCode::Unreachable, "stand point: no reachable cell next to '" + std::string(target_id) + "'");
  const Vec2 p = grid.center(best);
  return {p.x(), p.y(), from.z()};
}

}  // namespace previs
