#pragma once

#include "previs/assets.hpp"
#include "previs/project.hpp"
#include "previs/ranker.hpp"
#include "previs/render.hpp"
#include "previs/scene.hpp"
#include "previs/shot.hpp"
#include "previs/story.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace previs {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
/// concurrency). Results must be written to per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

struct LoadedScene {
  SceneGraph graph;
  SceneMesh mesh;
};

/// Where each character stands when `line_index` starts: the project
/// placement (or the scene spawn point), advanced to the stand point of every
/// earlier locomotion line of that character.
Placement line_start(const Project& p, int line_index, const SceneGraph& scene, const AssetRegistry& registry,
                     const GenerationConfig& cfg);

/// Story x camera product for one script line, before ranking.
struct CandidateSet {
  std::vector<StoryParams> stories;
  std::vector<std::pair<int, CameraTrajectory>> pairs;  // (story index, camera)
  int raw_count = 0;
  std::vector<std::string> warnings;
};

CandidateSet enumerate_candidates(const ScriptLine& line, const SceneGraph& scene, const AssetRegistry& registry,
                                  const ClipPool& pool, const Placement& start, const GenerationConfig& cfg);

double fallback_score(const ShotMetrics& m, double jerk_scale);

/// Assets, projects and an optional trained ranker: the single orchestration
/// path behind both the CLI and the HTTP service.
class Studio {
 public:
  Studio(std::filesystem::path assets_dir, std::filesystem::path store_dir);

  const AssetRegistry& registry() const { return registry_; }
  const ClipPool& clip_pool() const { return pool_; }
  ProjectStore& store() { return store_; }
  const ProjectStore& store() const { return store_; }

  void set_model(std::optional<RankerModel> model);
  bool has_model() const { return model_.has_value(); }
  void set_threads(unsigned n) { threads_ = n; }

  std::shared_ptr<const LoadedScene> scene(const std::string& scene_id) const;

  Project create_project(const std::string& id, const std::string& scene_id,
                         const GenerationConfig& cfg = {}) const;
  /// Rejects unknown characters and placements on blocked cells.
  void add_placement(Project& p, const Placement& placement) const;
  /// Parses and validates the line against the assets; appends it.
  int add_line(Project& p, const std::string& text) const;

  /// Story proposals for a line from its chained start, under the project config.
  std::vector<StoryParams> line_stories(const Project& p, int line_index) const;

  /// Builds, simulates and ranks the proposal set for one line and appends it
  /// as a new run. Module errors are rethrown with the line number prefixed.
  const ProposalRun& generate_line(Project& p, int line_index) const;

  /// Rebuilds a persisted proposal (story replanned, camera regenerated).
  ShotProposal rebuild(const Project& p, const std::string& proposal_id) const;

  /// Frame t of a persisted proposal.
  Frame render_proposal_frame(const Project& p, const std::string& proposal_id, int t, ImageSize size) const;

  /// Three keyframes (first, middle, last of the 8 sampled frames) side by side.
  Frame contact_sheet_for(const Project& p, const std::string& proposal_id, ImageSize size) const;

  /// Selected shots in line order: frame directories, contact sheets and a
  /// manifest with per-frame PNG hashes. IncompleteSelection lists lines
  /// without a selection.
  nlohmann::json export_storyboard(const Project& p, const std::filesystem::path& out_dir,
                                   std::optional<ImageSize> size = std::nullopt) const;

 private:
  AssetRegistry registry_;
  ClipPool pool_;
  ProjectStore store_;
  std::optional<RankerModel> model_;
  unsigned threads_ = 0;
  mutable std::mutex scene_mutex_;
  mutable std::map<std::string, std::shared_ptr<const LoadedScene>> scenes_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const ShotProposal>> rebuilt_;
  mutable std::vector<std::string> rebuilt_order_;

  std::shared_ptr<const ShotProposal> cached_rebuild(const Project& p, const std::string& proposal_id) const;
};

std::filesystem::path default_assets_dir();
std::filesystem::path default_store_dir();

}  // namespace previs
