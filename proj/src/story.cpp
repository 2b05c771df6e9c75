#include "previs/story.hpp"

#include "previs/error.hpp"
#include "previs/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace previs {

namespace {

void check_clip(const ActionClip& clip)
{
  if (clip.duration_frames < 1)
    throw Error(ErrorCode::Schema, "clip '" + clip.key + "': duration_frames must be >= 1");
  if (clip.posture_track.empty() || clip.posture_track.front().frame != 0)
    throw Error(ErrorCode::Schema, "clip '" + clip.key + "': posture track must start at frame 0");
  for (std::size_t i = 1; i < clip.posture_track.size(); ++i)
    if (clip.posture_track[i].frame <= clip.posture_track[i - 1].frame)
      throw Error(ErrorCode::Schema, "clip '" + clip.key + "': posture keyframes must be sorted");
}

}  // namespace

ClipPool parse_clip_pool(const nlohmann::json& doc)
{
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version > kClipPoolSchemaVersion)
      throw Error(ErrorCode::VersionMismatch, "clip pool: schema_version " + std::to_string(version) + " unsupported");
    ClipPool pool;
    for (const auto& jc : doc.at("clips")) {
      ActionClip clip;
      clip.key = jc.at("key").get<std::string>();
      clip.verb = jc.at("verb").get<std::string>();
      clip.duration_frames = jc.at("duration_frames").get<int>();
      clip.locomotion = jc.value("locomotion", false);
      for (const auto& jk : jc.value("posture_track", nlohmann::json::array())) {
        PostureKey k;
        k.frame = jk.at("frame").get<int>();
        k.root_height_m = jk.value("root_height_m", 0.0);
        k.posture = jk.value("posture", std::string("stand"));
        k.facing_offset_rad = jk.value("facing_offset_rad", 0.0);
        clip.posture_track.push_back(std::move(k));
      }
      if (clip.posture_track.empty()) clip.posture_track.push_back({});
      check_clip(clip);
      pool.clips.push_back(std::move(clip));
    }
    return pool;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("clip pool: ") + e.what());
  }
}

ClipPool load_clip_pool(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open clip pool " + file.string());
  try {
    return parse_clip_pool(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Schema, file.string() + ": " + e.what());
  }
}

std::vector<ActionClip> retrieve_clips(const std::string& verb, const ClipPool& pool, int N)
{
  std::vector<ActionClip> out;
  bool any = false;
  for (const auto& clip : pool.clips) {
    if (clip.verb != verb) continue;
    any = true;
    if (static_cast<int>(out.size()) < N) out.push_back(clip);
  }
  if (!any) throw Error(ErrorCode::UnknownVerb, "no clips for verb '" + verb + "'");
  return out;
}

Vec3 story_goal(const StoryScript& script, const SceneGraph& scene, const OccupancyGrid& grid, const Vec3& from,
                double capsule_radius_m)
{
  if (!script.target_ref) throw Error(ErrorCode::UnknownTarget, "story: verb needs a target");
  if (!scene.find(*script.target_ref))
    throw Error(ErrorCode::UnknownTarget, "unknown target '" + *script.target_ref + "'");
  return stand_point(grid, scene, *script.target_ref, from, capsule_radius_m);
}

std::vector<StoryParams> propose_story(const StoryScript& script, const SceneGraph& scene,
                                       const AssetRegistry& registry, const ClipPool& pool, const Placement& start,
                                       const StoryOptions& options)
{
  auto ch = registry.characters.find(script.character_id);
  if (ch == registry.characters.end())
    throw Error(ErrorCode::UnknownCharacter, "unknown character '" + script.character_id + "'");
  auto verb = registry.verbs.find(script.action_verb);
  if (verb == registry.verbs.end())
    throw Error(ErrorCode::UnknownVerb, "unknown verb '" + script.action_verb + "'");

  const auto clips = retrieve_clips(script.action_verb, pool, options.clips_per_verb);
  const CharacterAsset& asset = ch->second;

  auto base = [&](const ActionClip& clip, int n) {
    StoryParams s;
    s.character_id = script.character_id;
    s.height_m = asset.height_m;
    s.capsule_radius_m = asset.capsule_radius_m;
    s.clip = clip;
    s.clip_index = n;
    s.rest_facing_rad = start.facing_rad;
    return s;
  };

  std::vector<StoryParams> out;
  if (!verb->second.locomotion) {
    double facing = start.facing_rad;
    if (script.target_ref) {
      const Vec3 target = resolve_target(scene, *script.target_ref);
      const Vec2 d(target.x() - start.position.x(), target.y() - start.position.y());
      if (d.norm() > 1e-9) facing = std::atan2(d.y(), d.x());
    }
    for (std::size_t n = 0; n < clips.size(); ++n) {
      StoryParams s = base(clips[n], static_cast<int>(n));
      s.rest_facing_rad = facing;
      s.path.frame_rate = options.planner.fps;
      s.path.waypoints.assign(clips[n].duration_frames, start.position);
      out.push_back(std::move(s));
    }
    return out;
  }

  const OccupancyGrid grid = build_grid(scene, options.cell_size_m, asset.capsule_radius_m);
  const Vec3 goal = story_goal(script, scene, grid, start.position, asset.capsule_radius_m);
  const auto routes = plan_routes(grid, start.position, goal, options.paths_per_clip, options.planner);
  const double max_step = options.planner.v_max_mps / options.planner.fps;

  for (std::size_t n = 0; n < clips.size(); ++n) {
    const int T = clips[n].duration_frames;
    for (std::size_t m = 0; m < routes.size(); ++m) {
      const double len = route_length(routes[m]);
      if (len > 0.0 && (T < 2 || len / (T - 1) > max_step + 1e-12)) continue;
      StoryParams s = base(clips[n], static_cast<int>(n));
      s.path = resample_route(routes[m], T, options.planner.fps);
      s.path_index = static_cast<int>(m);
      out.push_back(std::move(s));
    }
  }
  return out;
}

Vec3 character_position_at(const StoryParams& s, double u)
{
  const auto& w = s.path.waypoints;
  if (w.empty()) throw Error(ErrorCode::FrameOutOfRange, "story: empty path");
  const double last = static_cast<double>(w.size() - 1);
  u = std::clamp(u, 0.0, last);
  const auto i = static_cast<std::size_t>(std::floor(u));
  if (i >= w.size() - 1) return w.back();
  const double f = u - static_cast<double>(i);
  return w[i] + f * (w[i + 1] - w[i]);
}

CharacterState character_at(const StoryParams& s, int t)
{
  const auto& w = s.path.waypoints;
  if (t < 0 || t >= static_cast<int>(w.size()))
    throw Error(ErrorCode::FrameOutOfRange,
                "frame " + std::to_string(t) + " outside [0, " + std::to_string(w.size()) + ")");

  CharacterState st;
  st.position = w[t];
  st.height_m = s.height_m;
  st.capsule_radius_m = s.capsule_radius_m;

  // Forward difference; the last frame and stationary stretches reuse the
  // most recent tangent.
  double facing = s.rest_facing_rad;
  const int last = static_cast<int>(w.size()) - 1;
  for (int k = std::min(t, last - 1); k >= 0; --k) {
    const Vec2 d(w[k + 1].x() - w[k].x(), w[k + 1].y() - w[k].y());
    if (d.norm() > 1e-12) {
      facing = std::atan2(d.y(), d.x());
      break;
    }
  }

  static const PostureKey kStand{};
  const PostureKey* key = &kStand;
  for (const auto& k : s.clip.posture_track) {
    if (k.frame > t) break;
    key = &k;
  }
  st.posture_label = key->posture;
  st.root_height_m = key->root_height_m;
  st.facing_rad = wrap_angle(facing + key->facing_offset_rad);
  return st;
}

}  // namespace previs
