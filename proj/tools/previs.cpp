// previs: command-line front end over the same Studio used by the HTTP service.

#include "previs/corpus.hpp"
#include "previs/error.hpp"
#include "previs/image_io.hpp"
#include "previs/pipeline.hpp"
#include "previs/service.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace previs;

namespace {

struct Globals {
  std::string assets = default_assets_dir().string();
  std::string store = default_store_dir().string();
  unsigned threads = 0;
};

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "Anna:1.5,2.0[,facing]" -> placement on the floor.
Placement parse_place(const std::string& spec)
{
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Validation, "--place expects NAME:x,y[,facing]");
  Placement p;
  p.character_id = spec.substr(0, colon);
  std::vector<double> v;
  std::stringstream ss(spec.substr(colon + 1));
  for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
  if (v.size() < 2 || v.size() > 3) throw Error(ErrorCode::Validation, "--place expects NAME:x,y[,facing]");
  p.position = {v[0], v[1], 0.0};
  p.facing_rad = v.size() == 3 ? v[2] : 0.0;
  return p;
}

std::unique_ptr<Studio> open_studio(const Globals& g, const std::string& checkpoint)
{
  auto studio = std::make_unique<Studio>(g.assets, g.store);
  studio->set_threads(g.threads);
  if (!checkpoint.empty()) studio->set_model(load_checkpoint(checkpoint));
  return studio;
}

void print_run(const ProposalRun& run, int line, int top)
{
  std::printf("line %d run %d: %zu proposals (%d raw, %d stories, ranker %s)\n", line, run.run,
              run.proposals.size(), run.raw_count, run.story_count, run.ranker.c_str());
  for (const auto& w : run.warnings) std::printf("  %s\n", w.c_str());
  for (int i = 0; i < top && i < static_cast<int>(run.proposals.size()); ++i) {
    const auto& r = run.proposals[i];
    std::printf("  %3d  %-24s score %.6g  jerk %.3g  %s\n", r.rank, r.id.c_str(), r.score, r.jerk,
                describe(r.tag).c_str());
  }
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Schematic previsualization studio: script-driven shot proposals, ranking and storyboard export"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--assets", g.assets, "Asset directory holding registry.json")->capture_default_str();
  app.add_option("--store", g.store, "Project store root (env PREVIS_STORE)")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads, 0 for all cores")->capture_default_str();

  // scene ls
  auto* scene_cmd = app.add_subcommand("scene", "Scene registry");
  scene_cmd->require_subcommand(1);
  auto* scene_ls = scene_cmd->add_subcommand("ls", "List registered scenes");

  // propose
  auto* propose = app.add_subcommand("propose", "Create a project from a script and generate proposals per line");
  std::string project_id, scene_id, script_file, checkpoint;
  std::vector<std::string> places;
  int line_no = 0, top = 5;
  std::uint64_t seed = 1;
  bool overwrite = false;
  propose->add_option("--project", project_id, "Project id")->required();
  propose->add_option("--scene", scene_id, "Scene id (new projects)");
  propose->add_option("--script", script_file, "Script file, one '(story);(camera)' line each");
  propose->add_option("--place", places, "Character placement NAME:x,y[,facing_rad]");
  propose->add_option("--line", line_no, "Regenerate only this line of an existing project");
  propose->add_option("--checkpoint", checkpoint, "Ranker checkpoint (metric ranking when omitted)");
  propose->add_option("--seed", seed, "Generation seed")->capture_default_str();
  propose->add_option("--top", top, "Proposals printed per line")->capture_default_str();
  propose->add_flag("--overwrite", overwrite, "Replace an existing project");

  // rank
  auto* rank = app.add_subcommand("rank", "Show ranked proposals; with --checkpoint re-rank as a new run");
  std::string rank_ck;
  int rank_line = 0, rank_top = 10;
  rank->add_option("--project", project_id, "Project id")->required();
  rank->add_option("--line", rank_line, "Line (all lines when omitted)");
  rank->add_option("--top", rank_top, "Rows per line")->capture_default_str();
  rank->add_option("--checkpoint", rank_ck, "Re-rank with this checkpoint");

  // select
  auto* select = app.add_subcommand("select", "Select a proposal for a line");
  std::string proposal_id;
  int select_line = 0;
  bool select_best = false;
  select->add_option("--project", project_id, "Project id")->required();
  select->add_option("--line", select_line, "Line index");
  select->add_option("--proposal", proposal_id, "Proposal id");
  select->add_flag("--best", select_best, "Select rank 1 on every line");

  // render
  auto* render = app.add_subcommand("render", "Render a proposal's frames to PNG");
  std::string out_dir;
  int width = 1280, height = 720;
  bool contact_only = false;
  render->add_option("--proposal", proposal_id, "Proposal id")->required();
  render->add_option("--out", out_dir, "Output directory")->required();
  render->add_option("--width", width)->capture_default_str();
  render->add_option("--height", height)->capture_default_str();
  render->add_flag("--contact", contact_only, "Write only the 3-keyframe contact sheet");

  // export
  auto* exp = app.add_subcommand("export", "Export the selected shots as a storyboard");
  exp->add_option("--project", project_id, "Project id")->required();
  exp->add_option("--out", out_dir, "Output directory")->required();
  exp->add_option("--width", width, "Frame width (project render size when omitted)");
  exp->add_option("--height", height, "Frame height");

  // train-ranker
  auto* train = app.add_subcommand("train-ranker", "Train the shot ranker on a synthetic clean/perturbed corpus");
  std::string train_out = "ranker.pvrk", train_log, train_scene = "apartment", train_script;
  TrainOptions topts;
  RankerConfig rcfg;
  rcfg.queue_size = 4096;
  CorpusOptions copts;
  train->add_option("--out", train_out, "Checkpoint path")->capture_default_str();
  train->add_option("--log", train_log, "Per-epoch loss CSV");
  train->add_option("--scene", train_scene, "Scene for the corpus")->capture_default_str();
  train->add_option("--script", train_script, "Script supplying the corpus stories (assets/scripts/fixture10.txt)");
  train->add_option("--epochs", topts.epochs)->capture_default_str();
  train->add_option("--batch", topts.batch)->capture_default_str();
  train->add_option("--lr", rcfg.lr)->capture_default_str();
  train->add_option("--queue", rcfg.queue_size, "Momentum queue length K")->capture_default_str();
  train->add_option("--clean", copts.clean, "Clean source shots")->capture_default_str();
  train->add_option("--seed", rcfg.seed, "Model initialization seed")->capture_default_str();
  train->add_option("--shuffle-seed", topts.seed, "Batch shuffling seed")->capture_default_str();
  train->add_option("--corpus-seed", copts.seed, "Corpus selection and perturbation seed")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON API");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--checkpoint", checkpoint, "Ranker checkpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (scene_ls->parsed()) {
      const Studio studio(g.assets, g.store);
      for (const auto& [id, path] : studio.registry().scenes) std::printf("%s\t%s\n", id.c_str(), path.c_str());
    } else if (propose->parsed()) {
      auto studio = open_studio(g, checkpoint);
      Project p;
      const bool exists = studio->store().exists(project_id);
      if (line_no > 0) {
        p = studio->store().load(project_id);
      } else {
        if (exists && !overwrite)
          throw Error(ErrorCode::DuplicateId, "project '" + project_id + "' exists; pass --overwrite or --line");
        if (scene_id.empty() || script_file.empty())
          throw Error(ErrorCode::Validation, "new projects need --scene and --script");
        GenerationConfig cfg;
        cfg.seed = seed;
        p = studio->create_project(project_id, scene_id, cfg);
        for (const auto& pl : places) studio->add_placement(p, parse_place(pl));
        const auto doc = parse_script_document(read_file(script_file), VerbTable::from_registry(studio->registry()));
        for (const auto& l : doc) studio->add_line(p, l.raw_text);
      }
      const int first = line_no > 0 ? line_no : 1;
      const int last = line_no > 0 ? line_no : static_cast<int>(p.lines.size());
      for (int i = first; i <= last; ++i) print_run(studio->generate_line(p, i), i, top);
      studio->store().save(p);
    } else if (rank->parsed()) {
      auto studio = open_studio(g, rank_ck);
      Project p = studio->store().load(project_id);
      const int first = rank_line > 0 ? rank_line : 1;
      const int last = rank_line > 0 ? rank_line : static_cast<int>(p.lines.size());
      for (int i = first; i <= last; ++i) {
        if (!rank_ck.empty()) studio->generate_line(p, i);
        if (p.line(i).runs.empty()) {
          std::printf("line %d: not generated\n", i);
          continue;
        }
        print_run(p.line(i).runs.back(), i, rank_top);
      }
      if (!rank_ck.empty()) studio->store().save(p);
    } else if (select->parsed()) {
      auto studio = open_studio(g, {});
      Project p = studio->store().load(project_id);
      if (select_best) {
        for (auto& l : p.lines)
          if (!l.runs.empty() && !l.runs.back().proposals.empty())
            select_proposal(p, l.line.index, l.runs.back().proposals.front().id);
      } else {
        if (select_line < 1 || proposal_id.empty())
          throw Error(ErrorCode::Validation, "select needs --line and --proposal, or --best");
        select_proposal(p, select_line, proposal_id);
      }
      studio->store().save(p);
      std::printf("%s\n", to_json(compute_stats(p)).dump(2).c_str());
    } else if (render->parsed()) {
      auto studio = open_studio(g, {});
      const auto parts = parse_proposal_id(proposal_id);
      if (!parts) throw Error(ErrorCode::NotFound, "malformed proposal id '" + proposal_id + "'");
      const Project p = studio->store().load(parts->project);
      std::filesystem::create_directories(out_dir);
      const ImageSize size{width, height};
      if (contact_only) {
        write_png(std::filesystem::path(out_dir) / (proposal_id + "_contact.png"),
                  studio->contact_sheet_for(p, proposal_id, size));
      } else {
        const ShotProposal shot = studio->rebuild(p, proposal_id);
        const auto sc = studio->scene(p.scene_id);
        parallel_for(static_cast<std::size_t>(shot.frames()), [&](std::size_t t) {
          char name[32];
          std::snprintf(name, sizeof name, "frame_%04zu.png", t);
          write_png(std::filesystem::path(out_dir) / name, render_shot_frame(sc->mesh, shot, static_cast<int>(t), size));
        }, g.threads);
        std::printf("%d frames written to %s\n", shot.frames(), out_dir.c_str());
      }
    } else if (exp->parsed()) {
      auto studio = open_studio(g, {});
      const Project p = studio->store().load(project_id);
      std::optional<ImageSize> size;
      if (exp->count("--width") || exp->count("--height")) size = ImageSize{width, height};
      const auto manifest = studio->export_storyboard(p, out_dir, size);
      std::printf("%zu shots, %ld frames -> %s\n", manifest["shots"].size(), manifest["total_frames"].get<long>(),
                  out_dir.c_str());
    } else if (train->parsed()) {
      auto studio = open_studio(g, {});
      const std::string script_path =
          train_script.empty() ? (std::filesystem::path(g.assets) / "scripts" / "fixture10.txt").string() : train_script;
      Project p = studio->create_project("corpus", train_scene);
      for (const auto& l : parse_script_document(read_file(script_path), VerbTable::from_registry(studio->registry())))
        studio->add_line(p, l.raw_text);
      std::vector<StoryParams> stories;
      for (int i = 1; i <= static_cast<int>(p.lines.size()); ++i)
        for (auto& s : studio->line_stories(p, i)) stories.push_back(std::move(s));
      const auto candidates = gated_clean_shots(stories, p.config.grid, copts.features.preview);
      std::printf("%zu stories, %zu gated clean candidates\n", stories.size(), candidates.size());
      copts.threads = g.threads;
      const Corpus corpus = build_corpus(studio->scene(train_scene)->mesh, candidates, copts);
      std::printf("corpus: %zu train, %zu held-out, %zu pool samples\n", corpus.train.size(), corpus.heldout.size(),
                  corpus.pool.size());

      rcfg.input_dim = copts.features.dim();
      RankerModel model(rcfg);
      topts.on_epoch = [](int epoch, const LossBreakdown& l) {
        std::printf("epoch %3d  L_b %.5f  L_c %.5f  L_q %.5f\n", epoch, l.binary, l.cls, l.contrastive);
        std::fflush(stdout);
      };
      const auto history = train_ranker(model, corpus.train, topts);
      save_checkpoint(model, train_out);
      if (!train_log.empty()) {
        std::ofstream log(train_log);
        write_training_log(log, history);
      }
      const auto ev = evaluate_ranker(model, corpus);
      std::printf("held-out AUC %.4f  pool AUC %.4f  clean in top decile %.1f%% (%d of %d pool shots clean)\n",
                  ev.heldout_auc, ev.pool_auc, 100.0 * ev.top_decile_clean_fraction, ev.pool_clean, ev.pool_size);
      std::printf("checkpoint written to %s\n", train_out.c_str());
    } else if (serve->parsed()) {
      auto studio = open_studio(g, checkpoint);
      StudioService service(*studio);
      const int bound = service.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
      std::printf("serving on http://%s:%d/api\n", host.c_str(), bound);
      std::fflush(stdout);
      service.listen_after_bind();
    }
  } catch (const ScriptError& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return e.code() == ErrorCode::NotFound ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
