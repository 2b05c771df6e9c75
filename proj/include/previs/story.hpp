#pragma once

#include "previs/assets.hpp"
#include "previs/geometry.hpp"
#include "previs/planner.hpp"
#include "previs/script.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace previs {

class SceneGraph;

inline constexpr double kDefaultFps = 25.0;
inline constexpr int kClipPoolSchemaVersion = 1;

struct PostureKey {
  int frame = 0;
  double root_height_m = 0.0;
  std::string posture = "stand";
  double facing_offset_rad = 0.0;

  bool operator==(const PostureKey&) const = default;
};

/// Metadata-only animation clip: duration and posture labels, no skeleton.
struct ActionClip {
  std::string key;
  std::string verb;
  int duration_frames = 1;
  bool locomotion = false;
  std::vector<PostureKey> posture_track;

  bool operator==(const ActionClip&) const = default;
};

struct ClipPool {
  std::vector<ActionClip> clips;  // file order
};

ClipPool parse_clip_pool(const nlohmann::json& doc);
ClipPool load_clip_pool(const std::filesystem::path& file);

/// First min(N, available) clips for `verb`, in pool order.
std::vector<ActionClip> retrieve_clips(const std::string& verb, const ClipPool& pool, int N);

/// Where a character stands before a script line runs.
struct Placement {
  std::string character_id;
  Vec3 position = Vec3::Zero();
  double facing_rad = 0.0;

  bool operator==(const Placement&) const = default;
};

/// One executable story proposal s = (clip n, path m).
struct StoryParams {
  std::string character_id;
  double height_m = 1.6;
  double capsule_radius_m = 0.25;
  ActionClip clip;
  int clip_index = 0;
  Path path;
  int path_index = 0;
  double rest_facing_rad = 0.0;  // facing used while the path does not move

  int frames() const { return clip.duration_frames; }
};

struct CharacterState {
  Vec3 position = Vec3::Zero();
  double facing_rad = 0.0;
  std::string posture_label;
  double root_height_m = 0.0;
  double height_m = 1.6;
  double capsule_radius_m = 0.25;
};

struct StoryOptions {
  int clips_per_verb = 3;  // N
  int paths_per_clip = 3;  // M
  double cell_size_m = 0.1;
  PlannerOptions planner;
};

/// Where the character is heading for a script line: the target itself for
/// places, the adjacent stand point for objects.
Vec3 story_goal(const StoryScript& script, const SceneGraph& scene, const OccupancyGrid& grid,
                const Vec3& from, double capsule_radius_m);

/// N clips x M paths for locomotion verbs, N in-place proposals otherwise.
/// Clips whose routes all exceed v_max drop out silently.
std::vector<StoryParams> propose_story(const StoryScript& script, const SceneGraph& scene,
                                       const AssetRegistry& registry, const ClipPool& pool,
                                       const Placement& start, const StoryOptions& options = {});

CharacterState character_at(const StoryParams& s, int t);

/// Linear interpolation between integer-frame waypoints, u in [0, T-1].
Vec3 character_position_at(const StoryParams& s, double u);

}  // namespace previs
