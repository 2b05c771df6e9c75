#pragma once

#include "previs/camera.hpp"
#include "previs/render.hpp"
#include "previs/script.hpp"
#include "previs/story.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace previs {

inline constexpr int kProjectSchemaVersion = 1;

struct GenerationConfig {
  StoryOptions story;
  CameraGridConfig grid;
  int min_proposals = 40;
  int max_proposals = 200;
  ImageSize render_size{1280, 720};
  ImageSize preview_size = kPreviewSize;
  std::uint64_t seed = 1;
  double fallback_jerk_scale = 1e-3;  // metric-only ranking: exp(-(jerk/scale + mean center offset))
};

nlohmann::json to_json(const GenerationConfig& c);
GenerationConfig generation_config_from_json(const nlohmann::json& j);
bool operator==(const GenerationConfig& a, const GenerationConfig& b);

/// One ranked proposal as persisted in a run manifest. The story indices and
/// the generator tag are enough to rebuild the shot.
struct ProposalRecord {
  std::string id;
  int rank = 0;
  double score = 0.0;
  double jerk = 0.0;
  double mean_center_offset = 0.0;
  double mean_fill_ratio = 0.0;
  int frames = 0;
  std::string clip_key;
  int clip_index = 0;
  int path_index = 0;
  GeneratorTag tag;

  bool operator==(const ProposalRecord&) const = default;
};

struct ProposalRun {
  int run = 0;
  std::string ranker;  // "metric" or "model"
  nlohmann::json config;  // frozen GenerationConfig snapshot
  Placement start;
  int story_count = 0;
  int raw_count = 0;  // before the cap
  std::vector<std::string> warnings;
  std::vector<ProposalRecord> proposals;  // rank order

  bool operator==(const ProposalRun&) const = default;
};

struct LineState {
  ScriptLine line;
  std::vector<ProposalRun> runs;
  std::optional<std::string> selected;  // proposal id

  bool operator==(const LineState&) const = default;
};

struct Project {
  int schema_version = kProjectSchemaVersion;
  std::string id;
  std::string scene_id;
  std::vector<Placement> placements;
  std::vector<LineState> lines;
  GenerationConfig config;

  bool operator==(const Project& o) const;

  LineState& line(int index);
  const LineState& line(int index) const;
};

nlohmann::json to_json(const Project& p);
Project project_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProposalRecord& r);
ProposalRecord proposal_record_from_json(const nlohmann::json& j);

/// Looks up a proposal id ("{project}.{line}.{run}.{idx}") in the project.
const ProposalRecord* find_proposal(const Project& p, const std::string& proposal_id, int* line_index = nullptr,
                                    const ProposalRun** run = nullptr);

struct ProposalIdParts {
  std::string project;
  int line = 0;
  int run = 0;
  int index = 0;
};
std::optional<ProposalIdParts> parse_proposal_id(const std::string& id);
std::string make_proposal_id(const std::string& project, int line, int run, int index);

/// Marks a proposal of the line's latest run as selected; Validation when the
/// id is not part of that line.
void select_proposal(Project& p, int line_index, const std::string& proposal_id);

struct StatsSummary {
  std::map<std::string, int> by_movement;
  std::map<std::string, int> by_scale;
  std::map<std::string, int> by_angle;
  int total_shots = 0;
  long total_frames = 0;

  bool operator==(const StatsSummary&) const = default;
};

StatsSummary compute_stats(const Project& p);
nlohmann::json to_json(const StatsSummary& s);

/// Running counts maintained under select/unselect events.
class StatsAccumulator {
 public:
  void add(const ProposalRecord& r);
  void remove(const ProposalRecord& r);
  const StatsSummary& summary() const { return s_; }

 private:
  StatsSummary s_;
};

bool valid_project_id(const std::string& id);

/// JSON documents under a root directory, one file per project, replaced atomically.
class ProjectStore {
 public:
  explicit ProjectStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void save(const Project& p) const;
  Project load(const std::string& id) const;
  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;

 private:
  std::filesystem::path file_for(const std::string& id) const;
  std::filesystem::path root_;
};

/// Writes `data` to a sibling temp file and renames it over `file`.
void atomic_write(const std::filesystem::path& file, const std::string& data);

}  // namespace previs
