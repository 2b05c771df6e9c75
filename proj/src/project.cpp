#include "previs/project.hpp"

#include "previs/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace previs {

namespace {

nlohmann::json vec3_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

nlohmann::json size_json(ImageSize s) { return nlohmann::json::array({s.width, s.height}); }

ImageSize size_from(const nlohmann::json& j)
{
  ImageSize s{j.at(0).get<int>(), j.at(1).get<int>()};
  if (s.width < 1 || s.height < 1) throw Error(ErrorCode::Schema, "image size must be positive");
  return s;
}

nlohmann::json placement_json(const Placement& p)
{
  return {{"character_id", p.character_id}, {"position", vec3_json(p.position)}, {"facing_rad", p.facing_rad}};
}

Placement placement_from(const nlohmann::json& j)
{
  Placement p;
  p.character_id = j.at("character_id").get<std::string>();
  p.position = vec3_from(j.at("position"));
  p.facing_rad = j.value("facing_rad", 0.0);
  return p;
}

}  // namespace

nlohmann::json to_json(const GenerationConfig& c)
{
  return {
      {"clips_per_verb", c.story.clips_per_verb},
      {"paths_per_clip", c.story.paths_per_clip},
      {"cell_size_m", c.story.cell_size_m},
      {"planner",
       {{"corridor_radius_m", c.story.planner.corridor_radius_m},
        {"corridor_penalty", c.story.planner.corridor_penalty},
        {"v_max_mps", c.story.planner.v_max_mps},
        {"fps", c.story.planner.fps},
        {"searches_per_route", c.story.planner.searches_per_route}}},
      {"camera_grid", to_json(c.grid)},
      {"min_proposals", c.min_proposals},
      {"max_proposals", c.max_proposals},
      {"render_size", size_json(c.render_size)},
      {"preview_size", size_json(c.preview_size)},
      {"seed", c.seed},
      {"fallback_jerk_scale", c.fallback_jerk_scale},
  };
}

GenerationConfig generation_config_from_json(const nlohmann::json& j)
{
  GenerationConfig c;
  try {
    c.story.clips_per_verb = j.value("clips_per_verb", c.story.clips_per_verb);
    c.story.paths_per_clip = j.value("paths_per_clip", c.story.paths_per_clip);
    c.story.cell_size_m = j.value("cell_size_m", c.story.cell_size_m);
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      auto& o = c.story.planner;
      o.corridor_radius_m = p.value("corridor_radius_m", o.corridor_radius_m);
      o.corridor_penalty = p.value("corridor_penalty", o.corridor_penalty);
      o.v_max_mps = p.value("v_max_mps", o.v_max_mps);
      o.fps = p.value("fps", o.fps);
      o.searches_per_route = p.value("searches_per_route", o.searches_per_route);
    }
    if (j.contains("camera_grid")) c.grid = camera_grid_from_json(j.at("camera_grid"));
    c.min_proposals = j.value("min_proposals", c.min_proposals);
    c.max_proposals = j.value("max_proposals", c.max_proposals);
    if (j.contains("render_size")) c.render_size = size_from(j.at("render_size"));
    if (j.contains("preview_size")) c.preview_size = size_from(j.at("preview_size"));
    c.seed = j.value("seed", c.seed);
    c.fallback_jerk_scale = j.value("fallback_jerk_scale", c.fallback_jerk_scale);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("generation config: ") + e.what());
  }
  if (c.story.clips_per_verb < 1 || c.story.paths_per_clip < 1)
    throw Error(ErrorCode::Schema, "generation config: clips_per_verb and paths_per_clip must be >= 1");
  if (c.max_proposals < 1 || c.min_proposals > c.max_proposals)
    throw Error(ErrorCode::Schema, "generation config: need 1 <= max_proposals and min <= max");
  return c;
}

bool operator==(const GenerationConfig& a, const GenerationConfig& b) { return to_json(a) == to_json(b); }

nlohmann::json to_json(const ProposalRecord& r)
{
  return {{"id", r.id},
          {"rank", r.rank},
          {"score", r.score},
          {"jerk", r.jerk},
          {"mean_center_offset", r.mean_center_offset},
          {"mean_fill_ratio", r.mean_fill_ratio},
          {"frames", r.frames},
          {"clip_key", r.clip_key},
          {"clip_index", r.clip_index},
          {"path_index", r.path_index},
          {"tag", tag_to_json(r.tag)},
          {"description", describe(r.tag)}};
}

ProposalRecord proposal_record_from_json(const nlohmann::json& j)
{
  ProposalRecord r;
  r.id = j.at("id").get<std::string>();
  r.rank = j.at("rank").get<int>();
  r.score = j.at("score").get<double>();
  r.jerk = j.at("jerk").get<double>();
  r.mean_center_offset = j.at("mean_center_offset").get<double>();
  r.mean_fill_ratio = j.at("mean_fill_ratio").get<double>();
  r.frames = j.at("frames").get<int>();
  r.clip_key = j.at("clip_key").get<std::string>();
  r.clip_index = j.at("clip_index").get<int>();
  r.path_index = j.at("path_index").get<int>();
  r.tag = tag_from_json(j.at("tag"));
  return r;
}

bool Project::operator==(const Project& o) const
{
  return schema_version == o.schema_version && id == o.id && scene_id == o.scene_id && placements == o.placements &&
         lines == o.lines && config == o.config;
}

LineState& Project::line(int index)
{
  if (index < 1 || index > static_cast<int>(lines.size()))
    throw Error(ErrorCode::NotFound, "project " + id + ": no line " + std::to_string(index));
  return lines[index - 1];
}

const LineState& Project::line(int index) const { return const_cast<Project*>(this)->line(index); }

nlohmann::json to_json(const Project& p)
{
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : p.lines) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : l.runs) {
      nlohmann::json props = nlohmann::json::array();
      for (const auto& rec : r.proposals) props.push_back(to_json(rec));
      runs.push_back({{"run", r.run},
                      {"ranker", r.ranker},
                      {"config", r.config},
                      {"start", placement_json(r.start)},
                      {"story_count", r.story_count},
                      {"raw_count", r.raw_count},
                      {"warnings", r.warnings},
                      {"proposals", props}});
    }
    lines.push_back({{"index", l.line.index},
                     {"text", l.line.raw_text},
                     {"selected", l.selected ? nlohmann::json(*l.selected) : nlohmann::json(nullptr)},
                     {"runs", runs}});
  }
  nlohmann::json placements = nlohmann::json::array();
  for (const auto& pl : p.placements) placements.push_back(placement_json(pl));
  return {{"schema_version", p.schema_version},
          {"id", p.id},
          {"scene_id", p.scene_id},
          {"placements", placements},
          {"lines", lines},
          {"config", to_json(p.config)}};
}

Project project_from_json(const nlohmann::json& j)
{
  try {
    Project p;
    p.schema_version = j.at("schema_version").get<int>();
    if (p.schema_version > kProjectSchemaVersion)
      throw Error(ErrorCode::VersionMismatch,
                  "project: schema_version " + std::to_string(p.schema_version) + " is newer than supported");
    p.id = j.at("id").get<std::string>();
    p.scene_id = j.value("scene_id", std::string());
    for (const auto& pl : j.value("placements", nlohmann::json::array())) p.placements.push_back(placement_from(pl));
    if (j.contains("config")) p.config = generation_config_from_json(j.at("config"));
    for (const auto& jl : j.value("lines", nlohmann::json::array())) {
      LineState l;
      const int index = jl.at("index").get<int>();
      if (index != static_cast<int>(p.lines.size()) + 1)
        throw Error(ErrorCode::Schema, "project: line indices must be contiguous from 1");
      l.line = parse_script_line(jl.at("text").get<std::string>(), index);
      if (!jl.at("selected").is_null()) l.selected = jl.at("selected").get<std::string>();
      for (const auto& jr : jl.value("runs", nlohmann::json::array())) {
        ProposalRun r;
        r.run = jr.at("run").get<int>();
        r.ranker = jr.at("ranker").get<std::string>();
        r.config = jr.at("config");
        r.start = placement_from(jr.at("start"));
        r.story_count = jr.at("story_count").get<int>();
        r.raw_count = jr.at("raw_count").get<int>();
        r.warnings = jr.at("warnings").get<std::vector<std::string>>();
        for (const auto& jp : jr.at("proposals")) r.proposals.push_back(proposal_record_from_json(jp));
        l.runs.push_back(std::move(r));
      }
      p.lines.push_back(std::move(l));
    }
    for (const auto& l : p.lines)
      if (l.selected && !find_proposal(p, *l.selected))
        throw Error(ErrorCode::Schema, "project: selection '" + *l.selected + "' names no proposal");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("project: ") + e.what());
  }
}

std::string make_proposal_id(const std::string& project, int line, int run, int index)
{
  return project + "." + std::to_string(line) + "." + std::to_string(run) + "." + std::to_string(index);
}

std::optional<ProposalIdParts> parse_proposal_id(const std::string& id)
{
  static const std::regex re(R"(^([A-Za-z0-9_-]+)\.(\d+)\.(\d+)\.(\d+)$)");
  std::smatch m;
  if (!std::regex_match(id, m, re)) return std::nullopt;
  try {
    return ProposalIdParts{m[1].str(), std::stoi(m[2].str()), std::stoi(m[3].str()), std::stoi(m[4].str())};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

const ProposalRecord* find_proposal(const Project& p, const std::string& proposal_id, int* line_index,
                                    const ProposalRun** run)
{
  const auto parts = parse_proposal_id(proposal_id);
  if (!parts || parts->project != p.id || parts->line < 1 || parts->line > static_cast<int>(p.lines.size()))
    return nullptr;
  for (const auto& r : p.lines[parts->line - 1].runs) {
    if (r.run != parts->run) continue;
    for (const auto& rec : r.proposals)
      if (rec.id == proposal_id) {
        if (line_index) *line_index = parts->line;
        if (run) *run = &r;
        return &rec;
      }
  }
  return nullptr;
}

void select_proposal(Project& p, int line_index, const std::string& proposal_id)
{
  LineState& l = p.line(line_index);
  if (l.runs.empty()) throw Error(ErrorCode::Validation, "line " + std::to_string(line_index) + " has no proposals");
  const auto& latest = l.runs.back();
  const bool ok = std::any_of(latest.proposals.begin(), latest.proposals.end(),
                              [&](const ProposalRecord& r) { return r.id == proposal_id; });
  if (!ok)
    throw Error(ErrorCode::Validation,
                "proposal '" + proposal_id + "' is not in the latest run of line " + std::to_string(line_index));
  l.selected = proposal_id;
}

StatsSummary compute_stats(const Project& p)
{
  StatsAccumulator acc;
  for (const auto& l : p.lines)
    if (l.selected)
      if (const auto* rec = find_proposal(p, *l.selected)) acc.add(*rec);
  return acc.summary();
}

void StatsAccumulator::add(const ProposalRecord& r)
{
  ++s_.by_movement[std::string(to_token(r.tag.movement))];
  ++s_.by_scale[std::string(to_token(r.tag.scale))];
  ++s_.by_angle[std::string(to_token(r.tag.angle))];
  ++s_.total_shots;
  s_.total_frames += r.frames;
}

void StatsAccumulator::remove(const ProposalRecord& r)
{
  auto dec = [](std::map<std::string, int>& m, std::string_view k) {
    auto it = m.find(std::string(k));
    if (it == m.end()) throw Error(ErrorCode::Validation, "stats: removing an uncounted shot");
    if (--it->second == 0) m.erase(it);
  };
  dec(s_.by_movement, to_token(r.tag.movement));
  dec(s_.by_scale, to_token(r.tag.scale));
  dec(s_.by_angle, to_token(r.tag.angle));
  --s_.total_shots;
  s_.total_frames -= r.frames;
}

nlohmann::json to_json(const StatsSummary& s)
{
  return {{"by_movement", s.by_movement},
          {"by_scale", s.by_scale},
          {"by_angle", s.by_angle},
          {"total_shots", s.total_shots},
          {"total_frames", s.total_frames}};
}

bool valid_project_id(const std::string& id)
{
  static const std::regex re(R"(^[A-Za-z0-9_-]{1,64}$)");
  return std::regex_match(id, re);
}

void atomic_write(const std::filesystem::path& file, const std::string& data)
{
  const auto tmp = file.parent_path() / (file.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << data;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

ProjectStore::ProjectStore(std::filesystem::path root) : root_(std::move(root))
{
  std::filesystem::create_directories(root_);
}

std::filesystem::path ProjectStore::file_for(const std::string& id) const
{
  if (!valid_project_id(id)) throw Error(ErrorCode::Validation, "invalid project id '" + id + "'");
  return root_ / (id + ".json");
}

void ProjectStore::save(const Project& p) const { atomic_write(file_for(p.id), to_json(p).dump(2) + "\n"); }

Project ProjectStore::load(const std::string& id) const
{
  const auto file = file_for(id);
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::NotFound, "project '" + id + "' not found");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Schema, file.string() + ": " + e.what());
  }
  return project_from_json(j);
}

bool ProjectStore::exists(const std::string& id) const { return std::filesystem::exists(file_for(id)); }

std::vector<std::string> ProjectStore::list() const
{
  std::vector<std::string> ids;
  for (const auto& e : std::filesystem::directory_iterator(root_))
    if (e.path().extension() == ".json") ids.push_back(e.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace previs
