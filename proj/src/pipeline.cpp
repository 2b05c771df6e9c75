#include "previs/pipeline.hpp"

#include "previs/error.hpp"
#include "previs/features.hpp"
#include "previs/grid.hpp"
#include "previs/image_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <thread>

namespace previs {

namespace {

constexpr std::size_t kRebuildCacheSize = 64;

std::string issue_text(const ValidationReport& r)
{
  std::string s;
  for (const auto& i : r.issues) {
    if (!s.empty()) s += "; ";
    s += std::string(to_string(i.kind)) + " '" + i.identifier + "'";
  }
  return s;
}

ErrorCode issue_code(IssueKind k)
{
  switch (k) {
    case IssueKind::UnknownCharacter: return ErrorCode::UnknownCharacter;
    case IssueKind::UnknownVerb: return ErrorCode::UnknownVerb;
    case IssueKind::UnknownTarget: return ErrorCode::UnknownTarget;
    default: return ErrorCode::Validation;
  }
}

template <class F>
auto with_line_context(int line, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const ScriptError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), "line " + std::to_string(line) + ": " + e.what());
  }
}

int clip_count(const ClipPool& pool, const std::string& verb)
{
  return static_cast<int>(std::count_if(pool.clips.begin(), pool.clips.end(),
                                        [&](const ActionClip& c) { return c.verb == verb; }));
}

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads)
{
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Placement line_start(const Project& p, int line_index, const SceneGraph& scene, const AssetRegistry& registry,
                     const GenerationConfig& cfg)
{
  const LineState& target_line = p.line(line_index);
  const std::string& who = target_line.line.story.character_id;
  auto ch = registry.characters.find(who);
  if (ch == registry.characters.end()) throw Error(ErrorCode::UnknownCharacter, "unknown character '" + who + "'");

  Placement at;
  auto it = std::find_if(p.placements.begin(), p.placements.end(),
                         [&](const Placement& pl) { return pl.character_id == who; });
  if (it != p.placements.end()) {
    at = *it;
  } else if (const SceneNode* spawn = scene.spawn_for(who)) {
    at = {who, scene.world_position(spawn->id), spawn->facing_rad};
  } else {
    throw Error(ErrorCode::Validation, "character '" + who + "' has no placement and no spawn point");
  }

  std::optional<OccupancyGrid> grid;
  for (int j = 1; j < line_index; ++j) {
    const StoryScript& st = p.line(j).line.story;
    if (st.character_id != who || !st.target_ref) continue;
    auto verb = registry.verbs.find(st.action_verb);
    if (verb == registry.verbs.end() || !verb->second.locomotion) continue;
    if (!grid) grid = build_grid(scene, cfg.story.cell_size_m, ch->second.capsule_radius_m);
    try {
      const Vec3 goal = story_goal(st, scene, *grid, at.position, ch->second.capsule_radius_m);
      const Vec2 d(goal.x() - at.position.x(), goal.y() - at.position.y());
      if (d.norm() > 1e-9) at.facing_rad = std::atan2(d.y(), d.x());
      at.position = goal;
    } catch (const Error&) {
      // An unreachable earlier line leaves the character where it was.
    }
  }
  return at;
}

CandidateSet enumerate_candidates(const ScriptLine& line, const SceneGraph& scene, const AssetRegistry& registry,
                                  const ClipPool& pool, const Placement& start, const GenerationConfig& cfg)
{
  auto build = [&](const StoryOptions& opts) {
    CandidateSet c;
    c.stories = propose_story(line.story, scene, registry, pool, start, opts);
    for (std::size_t s = 0; s < c.stories.size(); ++s)
      for (auto& cam : enumerate_camera_proposals(line.camera, c.stories[s], cfg.grid))
        c.pairs.emplace_back(static_cast<int>(s), std::move(cam));
    return c;
  };

  CandidateSet c = build(cfg.story);
  if (static_cast<int>(c.pairs.size()) < cfg.min_proposals) {
    StoryOptions wide = cfg.story;
    wide.clips_per_verb = std::max(wide.clips_per_verb, clip_count(pool, line.story.action_verb));
    wide.paths_per_clip += 2;
    CandidateSet w = build(wide);
    if (w.pairs.size() > c.pairs.size()) {
      c = std::move(w);
      c.warnings.push_back("widened story grid to " + std::to_string(wide.clips_per_verb) + " clips x " +
                           std::to_string(wide.paths_per_clip) + " paths");
    }
  }
  if (c.stories.empty())
    throw Error(ErrorCode::SpeedLimit, "no story proposal satisfies the speed limit for '" +
                                           line.story.action_verb + "'");
  c.raw_count = static_cast<int>(c.pairs.size());
  if (c.raw_count < cfg.min_proposals)
    c.warnings.push_back("WARN: " + std::to_string(c.raw_count) + " proposals, below the minimum of " +
                         std::to_string(cfg.min_proposals));
  if (c.raw_count > cfg.max_proposals) {
    std::vector<std::pair<int, CameraTrajectory>> kept;
    kept.reserve(cfg.max_proposals);
    const long long n = c.raw_count;
    for (long long i = 0; i < cfg.max_proposals; ++i) kept.push_back(std::move(c.pairs[i * n / cfg.max_proposals]));
    c.pairs = std::move(kept);
  }
  return c;
}

double fallback_score(const ShotMetrics& m, double jerk_scale)
{
  const int T = static_cast<int>(m.center_offset.size());
  if (T == 0) return 0.0;
  const double mean_offset = std::accumulate(m.center_offset.begin(), m.center_offset.end(), 0.0) / T;
  const double degenerate = static_cast<double>(m.degenerate_frames) / T;
  return std::exp(-(m.jerk / jerk_scale + mean_offset + degenerate));
}

std::filesystem::path default_assets_dir()
{
  if (const char* env = std::getenv("PREVIS_ASSETS"); env && *env) return env;
  return PREVIS_DEFAULT_ASSETS;
}

std::filesystem::path default_store_dir()
{
  if (const char* env = std::getenv("PREVIS_STORE"); env && *env) return env;
  return "previs_store";
}

Studio::Studio(std::filesystem::path assets_dir, std::filesystem::path store_dir)
    : registry_(load_registry(assets_dir / "registry.json")),
      pool_(load_clip_pool(registry_.clip_pool_path())),
      store_(std::move(store_dir))
{
}

void Studio::set_model(std::optional<RankerModel> model) { model_ = std::move(model); }

std::shared_ptr<const LoadedScene> Studio::scene(const std::string& scene_id) const
{
  std::lock_guard lock(scene_mutex_);
  auto it = scenes_.find(scene_id);
  if (it != scenes_.end()) return it->second;
  auto loaded = std::make_shared<LoadedScene>();
  loaded->graph = load_scene(registry_.scene_path(scene_id));
  loaded->mesh = build_scene_mesh(loaded->graph);
  scenes_.emplace(scene_id, loaded);
  return loaded;
}

Project Studio::create_project(const std::string& id, const std::string& scene_id, const GenerationConfig& cfg) const
{
  if (!valid_project_id(id)) throw Error(ErrorCode::Validation, "invalid project id '" + id + "'");
  scene(scene_id);  // NotFound for unknown scenes
  Project p;
  p.id = id;
  p.scene_id = scene_id;
  p.config = cfg;
  return p;
}

void Studio::add_placement(Project& p, const Placement& placement) const
{
  auto ch = registry_.characters.find(placement.character_id);
  if (ch == registry_.characters.end())
    throw Error(ErrorCode::UnknownCharacter, "unknown character '" + placement.character_id + "'");
  const auto sc = scene(p.scene_id);
  const OccupancyGrid grid = build_grid(sc->graph, p.config.story.cell_size_m, ch->second.capsule_radius_m);
  if (!grid.walkable(grid.cell_of(placement.position))) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "placement (%.3f, %.3f) is not on a walkable cell", placement.position.x(),
                  placement.position.y());
    throw Error(ErrorCode::Validation, buf);
  }
  auto it = std::find_if(p.placements.begin(), p.placements.end(),
                         [&](const Placement& pl) { return pl.character_id == placement.character_id; });
  if (it != p.placements.end())
    *it = placement;
  else
    p.placements.push_back(placement);
}

int Studio::add_line(Project& p, const std::string& text) const
{
  const int index = static_cast<int>(p.lines.size()) + 1;
  ScriptLine line;
  try {
    line = parse_script_line(text, index, VerbTable::from_registry(registry_));
  } catch (const ScriptError& e) {
    throw ScriptError(e.code(), "line " + std::to_string(index) + ": " + e.what(), e.offset(), e.field(), e.token());
  }
  const auto sc = scene(p.scene_id);
  const ValidationReport report = validate_against_assets(line.story, registry_, &sc->graph);
  if (!report.ok()) throw Error(issue_code(report.issues.front().kind), "line " + std::to_string(index) + ": " +
                                                                            issue_text(report));
  LineState ls;
  ls.line = std::move(line);
  p.lines.push_back(std::move(ls));
  return index;
}

std::vector<StoryParams> Studio::line_stories(const Project& p, int line_index) const
{
  const auto sc = scene(p.scene_id);
  const Placement start = line_start(p, line_index, sc->graph, registry_, p.config);
  return propose_story(p.line(line_index).line.story, sc->graph, registry_, pool_, start, p.config.story);
}

const ProposalRun& Studio::generate_line(Project& p, int line_index) const
{
  LineState& ls = p.line(line_index);
  const auto sc = scene(p.scene_id);
  const GenerationConfig& cfg = p.config;

  return with_line_context(line_index, [&]() -> const ProposalRun& {
    const ValidationReport report = validate_against_assets(ls.line.story, registry_, &sc->graph);
    if (!report.ok()) throw Error(issue_code(report.issues.front().kind), issue_text(report));

    const Placement start = line_start(p, line_index, sc->graph, registry_, cfg);
    CandidateSet cands = enumerate_candidates(ls.line, sc->graph, registry_, pool_, start, cfg);

    const int run_no = ls.runs.empty() ? 1 : ls.runs.back().run + 1;
    const std::size_t n = cands.pairs.size();
    std::vector<ShotProposal> shots(n);
    parallel_for(
        n,
        [&](std::size_t i) {
          const auto& [si, cam] = cands.pairs[i];
          shots[i] = simulate_shot(cands.stories[si], cam, cfg.preview_size,
                                   make_proposal_id(p.id, line_index, run_no, static_cast<int>(i)));
        },
        threads_);

    std::vector<double> scores(n), jerk(n);
    std::vector<std::string> ids(n);
    if (model_) {
      FeatureConfig fc;
      fc.grid = static_cast<int>(std::lround(std::sqrt(model_->config().input_dim - 3)));
      fc.preview = cfg.preview_size;
      if (fc.dim() != model_->config().input_dim)
        throw Error(ErrorCode::LengthMismatch, "ranker input width is not a square luminance grid + 3");
      parallel_for(
          n, [&](std::size_t i) { scores[i] = model_->forward(extract_features(sc->mesh, shots[i], fc, false).view_a).p_b; },
          threads_);
    } else {
      for (std::size_t i = 0; i < n; ++i) scores[i] = fallback_score(shots[i].metrics, cfg.fallback_jerk_scale);
    }
    for (std::size_t i = 0; i < n; ++i) {
      jerk[i] = shots[i].metrics.jerk;
      ids[i] = shots[i].id;
    }
    const auto order = rank_order(scores, jerk, ids);

    // Freeze the effective story grid so the run can be rebuilt exactly.
    GenerationConfig effective = cfg;
    if (!cands.stories.empty()) {
      int max_clip = 0, max_path = 0;
      for (const auto& s : cands.stories) {
        max_clip = std::max(max_clip, s.clip_index + 1);
        max_path = std::max(max_path, s.path_index + 1);
      }
      effective.story.clips_per_verb = std::max(effective.story.clips_per_verb, max_clip);
      effective.story.paths_per_clip = std::max(effective.story.paths_per_clip, max_path);
      for (const auto& w : cands.warnings)
        if (w.rfind("widened", 0) == 0) {
          effective.story.clips_per_verb =
              std::max(effective.story.clips_per_verb, clip_count(pool_, ls.line.story.action_verb));
          effective.story.paths_per_clip = cfg.story.paths_per_clip + 2;
        }
    }

    ProposalRun run;
    run.run = run_no;
    run.ranker = model_ ? "model" : "metric";
    run.config = to_json(effective);
    run.start = start;
    run.story_count = static_cast<int>(cands.stories.size());
    run.raw_count = cands.raw_count;
    run.warnings = cands.warnings;
    for (std::size_t r = 0; r < n; ++r) {
      const ShotProposal& s = shots[order[r]];
      ProposalRecord rec;
      rec.id = s.id;
      rec.rank = static_cast<int>(r) + 1;
      rec.score = scores[order[r]];
      rec.jerk = s.metrics.jerk;
      const double T = std::max(1, s.frames());
      rec.mean_center_offset = std::accumulate(s.metrics.center_offset.begin(), s.metrics.center_offset.end(), 0.0) / T;
      rec.mean_fill_ratio = std::accumulate(s.metrics.fill_ratio.begin(), s.metrics.fill_ratio.end(), 0.0) / T;
      rec.frames = s.frames();
      rec.clip_key = s.story.clip.key;
      rec.clip_index = s.story.clip_index;
      rec.path_index = s.story.path_index;
      rec.tag = s.camera.tag;
      run.proposals.push_back(std::move(rec));
    }
    ls.runs.push_back(std::move(run));
    return ls.runs.back();
  });
}

ShotProposal Studio::rebuild(const Project& p, const std::string& proposal_id) const
{
  int line_index = 0;
  const ProposalRun* run = nullptr;
  const ProposalRecord* rec = find_proposal(p, proposal_id, &line_index, &run);
  if (!rec) throw Error(ErrorCode::NotFound, "proposal '" + proposal_id + "' not found");
  const GenerationConfig cfg = generation_config_from_json(run->config);
  const auto sc = scene(p.scene_id);
  const ScriptLine& line = p.line(line_index).line;
  return with_line_context(line_index, [&] {
    const auto stories = propose_story(line.story, sc->graph, registry_, pool_, run->start, cfg.story);
    auto it = std::find_if(stories.begin(), stories.end(), [&](const StoryParams& s) {
      return s.clip_index == rec->clip_index && s.path_index == rec->path_index;
    });
    if (it == stories.end())
      throw Error(ErrorCode::Validation, "proposal '" + proposal_id + "' no longer matches the assets");
    CameraTrajectory cam = regenerate(rec->tag, *it);
    if (!(cam.tag == rec->tag))
      throw Error(ErrorCode::Validation, "proposal '" + proposal_id + "' regenerated with a different tag");
    return simulate_shot(*it, cam, cfg.preview_size, proposal_id);
  });
}

std::shared_ptr<const ShotProposal> Studio::cached_rebuild(const Project& p, const std::string& proposal_id) const
{
  {
    std::lock_guard lock(cache_mutex_);
    auto it = rebuilt_.find(proposal_id);
    if (it != rebuilt_.end()) return it->second;
  }
  auto built = std::make_shared<const ShotProposal>(rebuild(p, proposal_id));
  std::lock_guard lock(cache_mutex_);
  if (rebuilt_.emplace(proposal_id, built).second) {
    rebuilt_order_.push_back(proposal_id);
    if (rebuilt_order_.size() > kRebuildCacheSize) {
      rebuilt_.erase(rebuilt_order_.front());
      rebuilt_order_.erase(rebuilt_order_.begin());
    }
  }
  return built;
}

Frame Studio::render_proposal_frame(const Project& p, const std::string& proposal_id, int t, ImageSize size) const
{
  const auto shot = cached_rebuild(p, proposal_id);
  return render_shot_frame(scene(p.scene_id)->mesh, *shot, t, size);
}

Frame Studio::contact_sheet_for(const Project& p, const std::string& proposal_id, ImageSize size) const
{
  const auto shot = cached_rebuild(p, proposal_id);
  const auto sc = scene(p.scene_id);
  const auto idx = sample_frames(shot->frames(), std::min(8, shot->frames()));
  const int k = static_cast<int>(idx.size());
  std::vector<Frame> frames;
  for (int i : {0, k / 2, k - 1}) frames.push_back(render_shot_frame(sc->mesh, *shot, idx[i], size));
  return contact_sheet(frames);
}

nlohmann::json Studio::export_storyboard(const Project& p, const std::filesystem::path& out_dir,
                                         std::optional<ImageSize> size) const
{
  std::vector<int> missing;
  for (const auto& l : p.lines)
    if (!l.selected) missing.push_back(l.line.index);
  if (!missing.empty()) {
    std::string list;
    for (int m : missing) list += (list.empty() ? "" : ", ") + std::to_string(m);
    throw Error(ErrorCode::IncompleteSelection, "lines without a selection: " + list);
  }
  const ImageSize render_size = size.value_or(p.config.render_size);
  const auto sc = scene(p.scene_id);
  std::filesystem::create_directories(out_dir / "shots");

  nlohmann::json shots = nlohmann::json::array();
  long total = 0;
  for (const auto& l : p.lines) {
    const ProposalRecord* rec = find_proposal(p, *l.selected);
    const ShotProposal shot = rebuild(p, *l.selected);
    char name[32];
    std::snprintf(name, sizeof name, "line_%03d", l.line.index);
    const auto dir = out_dir / "shots" / name;
    std::filesystem::create_directories(dir);

    std::vector<std::string> hashes(shot.frames());
    parallel_for(
        static_cast<std::size_t>(shot.frames()),
        [&](std::size_t t) {
          const Frame f = render_shot_frame(sc->mesh, shot, static_cast<int>(t), render_size);
          const auto png = encode_png(f);
          char file[32];
          std::snprintf(file, sizeof file, "frame_%04zu.png", t);
          atomic_write(dir / file, std::string(png.begin(), png.end()));
          hashes[t] = hex64(fnv1a64(png.data(), png.size()));
        },
        threads_);

    const Frame sheet = contact_sheet_for(p, *l.selected, p.config.preview_size);
    const auto sheet_png = encode_png(sheet);
    const std::string sheet_name = std::string(name) + "_contact.png";
    atomic_write(out_dir / "shots" / sheet_name, std::string(sheet_png.begin(), sheet_png.end()));

    shots.push_back({{"line", l.line.index},
                     {"script", l.line.raw_text},
                     {"proposal_id", rec->id},
                     {"rank", rec->rank},
                     {"score", rec->score},
                     {"tag", tag_to_json(rec->tag)},
                     {"description", describe(rec->tag)},
                     {"clip_key", rec->clip_key},
                     {"start_frame", total},
                     {"frames", shot.frames()},
                     {"directory", "shots/" + std::string(name)},
                     {"contact_sheet", "shots/" + sheet_name},
                     {"contact_sheet_hash", hex64(fnv1a64(sheet_png.data(), sheet_png.size()))},
                     {"frame_hashes", hashes}});
    total += shot.frames();
  }
  nlohmann::json manifest = {{"schema_version", 1},
                             {"project", p.id},
                             {"scene", p.scene_id},
                             {"render_size", {render_size.width, render_size.height}},
                             {"fps", p.config.story.planner.fps},
                             {"total_frames", total},
                             {"stats", to_json(compute_stats(p))},
                             {"shots", shots}};
  atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace previs
