#include "previs/error.hpp"
#include "previs/grid.hpp"
#include "previs/scene.hpp"
#include "previs/story.hpp"

#include <doctest.h>

#include <cmath>

using namespace previs;

namespace {

struct Assets {
  AssetRegistry reg = load_registry(std::string(PREVIS_DEFAULT_ASSETS) + "/registry.json");
  ClipPool pool = load_clip_pool(reg.clip_pool_path());
  SceneGraph scene = load_scene(reg.scene_path("apartment"));
};

const Assets& assets()
{
  static const Assets a;
  return a;
}

Placement spawn(const std::string& who)
{
  const auto& a = assets();
  const SceneNode* n = a.scene.spawn_for(who);
  REQUIRE(n);
  return {who, a.scene.world_position(n->id), n->facing_rad};
}

StoryParams straight_story(std::vector<Vec3> pts)
{
  StoryParams s;
  s.clip.duration_frames = static_cast<int>(pts.size());
  s.path.waypoints = std::move(pts);
  return s;
}

}  // namespace

TEST_CASE("retrieve_clips")
{
  const auto& pool = assets().pool;
  CHECK(retrieve_clips("sit-on", pool, 5).size() == 3);
  const auto walk = retrieve_clips("walk-to", pool, 2);
  REQUIRE(walk.size() == 2);
  CHECK(walk[0].duration_frames == 75);
  CHECK(walk[1].duration_frames == 100);
  CHECK_THROWS_AS(retrieve_clips("fly", pool, 3), Error);
  try {
    retrieve_clips("fly", pool, 3);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownVerb);
  }
}

TEST_CASE("clip pool validation")
{
  using nlohmann::json;
  CHECK_THROWS_AS(parse_clip_pool(json::parse(R"({"schema_version":1,"clips":[{"key":"a","verb":"x","duration_frames":0}]})")), Error);
  CHECK_THROWS_AS(parse_clip_pool(json::parse(R"({"schema_version":1,"clips":[{"key":"a","verb":"x","duration_frames":5,
      "posture_track":[{"frame":2}]}]})")), Error);
  CHECK_THROWS_AS(parse_clip_pool(json::parse(R"({"schema_version":1,"clips":[{"key":"a","verb":"x","duration_frames":5,
      "posture_track":[{"frame":0},{"frame":3},{"frame":1}]}]})")), Error);
  const ClipPool p = parse_clip_pool(json::parse(R"({"schema_version":1,"clips":[{"key":"a","verb":"x","duration_frames":5}]})"));
  REQUIRE(p.clips[0].posture_track.size() == 1);
  CHECK(p.clips[0].posture_track[0].frame == 0);
}

TEST_CASE("in-place stories")
{
  const auto& a = assets();
  StoryOptions opts;
  opts.clips_per_verb = 2;
  const Placement bob = spawn("Bob");
  const auto stories = propose_story({"Bob", "sing", std::nullopt}, a.scene, a.reg, a.pool, bob, opts);
  REQUIRE(stories.size() == 2);
  for (const auto& s : stories) {
    CHECK(s.frames() == static_cast<int>(s.path.waypoints.size()));
    for (const auto& w : s.path.waypoints) CHECK(w == bob.position);
    CHECK(character_at(s, 0).facing_rad == doctest::Approx(bob.facing_rad));
  }
}

TEST_CASE("locomotion stories: N clips x M paths")
{
  const auto& a = assets();
  StoryOptions opts;
  opts.clips_per_verb = 2;
  opts.paths_per_clip = 3;
  opts.planner.v_max_mps = 100.0;
  const Placement anna = spawn("Anna");
  const StoryScript script{"Anna", "walk-to", "door"};
  const auto stories = propose_story(script, a.scene, a.reg, a.pool, anna, opts);

  const OccupancyGrid g = build_grid(a.scene, opts.cell_size_m, 0.25);
  const Vec3 goal = story_goal(script, a.scene, g, anna.position, 0.25);
  std::size_t expected = 0;
  for (const auto& clip : retrieve_clips("walk-to", a.pool, 2))
    expected += plan_paths(g, anna.position, goal, 3, clip.duration_frames, opts.planner).size();
  CHECK(expected == 6);
  REQUIRE(stories.size() == expected);

  for (const auto& s : stories) {
    CHECK(s.path.frames() == s.clip.duration_frames);
    CHECK((s.path.waypoints.back() - goal).norm() < 1e-12);
    const Cell end = g.cell_of(s.path.waypoints.back());
    bool adjacent = false;
    for (const Cell c : footprint_cells(g, a.scene, "door", 0.25))
      adjacent = adjacent || (std::abs(c.ix - end.ix) + std::abs(c.iy - end.iy) == 1);
    CHECK(adjacent);
  }
  // The same route resampled to both clip lengths.
  CHECK(stories[0].path.frames() == 75);
  CHECK(stories[3].path.frames() == 100);
  CHECK(stories[0].path_index == stories[3].path_index);
  CHECK((stories[0].path.waypoints.back() - stories[3].path.waypoints.back()).norm() < 1e-12);
  const auto routes = plan_routes(g, anna.position, goal, 3, opts.planner);
  CHECK(stories[0].path.waypoints == resample_route(routes[0], 75, opts.planner.fps).waypoints);
  CHECK(stories[3].path.waypoints == resample_route(routes[0], 100, opts.planner.fps).waypoints);
}

TEST_CASE("speed limit drops infeasible clips")
{
  const auto& a = assets();
  StoryOptions opts;
  opts.planner.v_max_mps = 0.5;
  const auto stories = propose_story({"Anna", "walk-to", "door"}, a.scene, a.reg, a.pool, spawn("Anna"), opts);
  CHECK(stories.empty());
}

TEST_CASE("story errors")
{
  const auto& a = assets();
  auto code = [&](StoryScript s) {
    try {
      propose_story(s, a.scene, a.reg, a.pool, spawn("Anna"));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code({"Zed", "sing", std::nullopt}) == ErrorCode::UnknownCharacter);
  CHECK(code({"Anna", "fly", std::nullopt}) == ErrorCode::UnknownVerb);
  CHECK(code({"Anna", "walk-to", "moon"}) == ErrorCode::UnknownTarget);
}

TEST_CASE("character_at")
{
  std::vector<Vec3> line;
  for (int t = 0; t < 10; ++t) line.emplace_back(0.1 * t, 0, 0);
  const StoryParams s = straight_story(line);
  CHECK(character_at(s, 0).position == line[0]);
  for (int t = 0; t < 10; ++t) CHECK(character_at(s, t).facing_rad == 0.0);
  CHECK_THROWS_AS(character_at(s, 10), Error);
  CHECK_THROWS_AS(character_at(s, -1), Error);

  // L-shape: +x for 5 frames, then +y.
  std::vector<Vec3> ell;
  for (int t = 0; t < 5; ++t) ell.emplace_back(0.1 * t, 0, 0);
  for (int t = 1; t <= 5; ++t) ell.emplace_back(0.4, 0.1 * t, 0);
  const StoryParams l = straight_story(ell);
  for (int t = 0; t < static_cast<int>(ell.size()); ++t) {
    const int k = std::min(t, static_cast<int>(ell.size()) - 2);
    const Vec3 d = ell[k + 1] - ell[k];
    CHECK(character_at(l, t).facing_rad == doctest::Approx(std::atan2(d.y(), d.x())));
  }
  CHECK(character_at(l, 3).facing_rad == doctest::Approx(0.0));
  CHECK(character_at(l, 4).facing_rad == doctest::Approx(kPi / 2));
}

TEST_CASE("posture keys apply from their frame on")
{
  StoryParams s = straight_story(std::vector<Vec3>(20, Vec3::Zero()));
  s.clip.posture_track = {{0, 0.0, "stand", 0.0}, {10, -0.4, "sit", kPi / 2}};
  CHECK(character_at(s, 9).posture_label == "stand");
  CHECK(character_at(s, 10).posture_label == "sit");
  CHECK(character_at(s, 10).root_height_m == -0.4);
  CHECK(character_at(s, 15).facing_rad == doctest::Approx(kPi / 2));
}

TEST_CASE("character_position_at interpolates")
{
  const StoryParams s = straight_story({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 2, 0)});
  CHECK((character_position_at(s, 0.5) - Vec3(0.5, 0, 0)).norm() < 1e-15);
  CHECK((character_position_at(s, 1.25) - Vec3(1, 0.5, 0)).norm() < 1e-15);
  CHECK(character_position_at(s, 2.0) == Vec3(1, 2, 0));
  CHECK(character_position_at(s, 7.0) == Vec3(1, 2, 0));
}
