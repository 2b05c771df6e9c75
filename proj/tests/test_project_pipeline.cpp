#include "previs/error.hpp"
#include "previs/image_io.hpp"
#include "previs/pipeline.hpp"
#include "previs/project.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace previs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("previs_test_" + name + "_" + std::to_string(::getpid())))
  {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& f)
{
  std::ifstream in(f, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GenerationConfig small_render()
{
  GenerationConfig c;
  c.render_size = {96, 54};
  c.preview_size = {64, 36};
  return c;
}

ErrorCode code_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

const ProposalRecord* first_with_frames(const ProposalRun& run, int frames)
{
  for (const auto& r : run.proposals)
    if (r.frames == frames) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("project JSON and store round trip")
{
  TempDir dir("store");
  Studio studio(PREVIS_DEFAULT_ASSETS, dir.path);
  Project empty = studio.create_project("empty", "apartment");
  studio.store().save(empty);
  CHECK(studio.store().load("empty") == empty);

  Project p = studio.create_project("full", "apartment", small_render());
  std::istringstream script(slurp(fs::path(PREVIS_DEFAULT_ASSETS) / "scripts" / "fixture10.txt"));
  for (std::string line; std::getline(script, line);)
    if (!line.empty() && line[0] != '#') studio.add_line(p, line);
  REQUIRE(p.lines.size() == 10);
  studio.generate_line(p, 2);
  studio.generate_line(p, 4);
  select_proposal(p, 2, p.line(2).runs.back().proposals[3].id);
  studio.store().save(p);
  const Project back = studio.store().load("full");
  CHECK(back == p);
  CHECK(project_from_json(to_json(p)) == p);
  CHECK(studio.store().list() == std::vector<std::string>{"empty", "full"});

  auto j = to_json(p);
  j["schema_version"] = kProjectSchemaVersion + 1;
  CHECK(code_of([&] { project_from_json(j); }) == ErrorCode::VersionMismatch);
  CHECK(code_of([&] { studio.store().load("nope"); }) == ErrorCode::NotFound);
  CHECK_FALSE(valid_project_id("../x"));
  CHECK(valid_project_id("demo-1"));
}

TEST_CASE("proposal ids")
{
  const std::string id = make_proposal_id("demo", 3, 2, 17);
  const auto parts = parse_proposal_id(id);
  REQUIRE(parts);
  CHECK(parts->project == "demo");
  CHECK(parts->line == 3);
  CHECK(parts->run == 2);
  CHECK(parts->index == 17);
  CHECK_FALSE(parse_proposal_id("demo.x.1.2"));
  CHECK_FALSE(parse_proposal_id("nodots"));
}

TEST_CASE("generation counts")
{
  TempDir dir("gen");
  Studio studio(PREVIS_DEFAULT_ASSETS, dir.path);
  Project p = studio.create_project("gen", "apartment", small_render());
  studio.add_line(p, "(Anna walk-to door);(follow medium eye-level)");
  studio.add_line(p, "(Bob sing);(static close-up eye-level)");

  const auto& walk = studio.generate_line(p, 1);
  CHECK(walk.story_count == 9);
  CHECK(walk.raw_count == 9 * 24);
  CHECK(walk.proposals.size() == 200);
  CHECK(walk.ranker == "metric");

  const auto& sing = studio.generate_line(p, 2);
  CHECK(sing.story_count == 3);
  CHECK(sing.proposals.size() >= 40);
  CHECK(sing.proposals.size() <= 200);

  for (const auto* run : {&p.line(1).runs.back(), &p.line(2).runs.back()}) {
    for (std::size_t i = 0; i < run->proposals.size(); ++i) {
      CHECK(run->proposals[i].rank == static_cast<int>(i) + 1);
      if (i) CHECK(run->proposals[i - 1].score >= run->proposals[i].score);
    }
  }
}

TEST_CASE("generation is deterministic and rebuildable")
{
  TempDir dir("det");
  Studio studio(PREVIS_DEFAULT_ASSETS, dir.path);
  Project a = studio.create_project("det", "apartment", small_render());
  studio.add_line(a, "(Anna walk-to table);(arc full eye-level)");
  Project b = a;
  studio.set_threads(1);
  const ProposalRun ra = studio.generate_line(a, 1);
  studio.set_threads(4);
  const ProposalRun rb = studio.generate_line(b, 1);
  CHECK(ra == rb);
  CHECK(to_json(a).dump() == to_json(b).dump());

  // A second run is appended; proposal ids name the run.
  const ProposalRun& again = studio.generate_line(a, 1);
  CHECK(again.run == ra.run + 1);
  CHECK(again.proposals == std::vector<ProposalRecord>(again.proposals));
  CHECK(parse_proposal_id(again.proposals[0].id)->run == again.run);

  for (int i : {0, 7, 42}) {
    const auto& rec = ra.proposals[i];
    const ShotProposal shot = studio.rebuild(a, rec.id);
    CHECK(shot.camera.tag == rec.tag);
    CHECK(shot.frames() == rec.frames);
    CHECK(shot.metrics.jerk == doctest::Approx(rec.jerk));
  }
  CHECK(code_of([&] { studio.rebuild(a, "det.1.1.9999"); }) == ErrorCode::NotFound);
}

TEST_CASE("line errors carry context and leave earlier runs intact")
{
  TempDir dir("err");
  Studio studio(PREVIS_DEFAULT_ASSETS, dir.path);
  Project p = studio.create_project("err", "apartment", small_render());
  try {
    studio.add_line(p, "(Anna walk-to door);(swoop medium eye-level)");
    FAIL("expected a script error");
  } catch (const ScriptError& e) {
    CHECK(e.token() == "swoop");
    CHECK(e.offset() == 21);
    CHECK(std::string(e.what()) == "line 1: unknown movement token 'swoop' at byte 21");
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  CHECK_THROWS_AS(studio.add_line(p, "(Anna walk-to spaceship);(follow medium eye-level)"), Error);
  CHECK_THROWS_AS(studio.add_line(p, "(Zed wave);(static medium eye-level)"), Error);
  CHECK(p.lines.empty());

  studio.add_line(p, "(Bob wave);(pan medium eye-level)");
  studio.generate_line(p, 1);
  const ProposalRun before = p.line(1).runs.back();
  p.line(1).line.story.action_verb = "fly";
  try {
    studio.generate_line(p, 1);
    FAIL("expected a generation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("line 1: ", 0) == 0);
  }
  REQUIRE(p.line(1).runs.size() == 1);
  CHECK(p.line(1).runs.back() == before);

  CHECK(code_of([&] { studio.add_placement(p, {"Anna", Vec3(1.6, -0.6, 0), 0.0}); }) != ErrorCode::Io);
  CHECK(code_of([&] { studio.add_placement(p, {"Nobody", Vec3(0, 0, 0), 0.0}); }) != ErrorCode::Io);
  CHECK(code_of([&] { studio.create_project("x", "moon"); }) == ErrorCode::NotFound);
}

TEST_CASE("stats: recomputed equals incremental under random selections")
{
  TempDir dir("stats");
  Studio studio(PREVIS_DEFAULT_ASSETS, dir.path);
  Project p = studio.create_project("stats", "apartment", small_render());
  studio.add_line(p, "(Bob sing);(zoom-in medium low)");
  studio.add_line(p, "(Anna dance);(pedestal medium high)");
  studio.add_line(p, "(Bob wave);(pan medium eye-level)");
  for (int l = 1; l <= 3; ++l) studio.generate_line(p, l);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    StatsAccumulator acc;
    for (auto& l : p.lines) l.selected.reset();
    for (int step = 0; step < 25; ++step) {
      const int line = static_cast<int>(rng() % 3) + 1;
      auto& ls = p.line(line);
      if (ls.selected && rng() % 3 == 0) {
        acc.remove(*find_proposal(p, *ls.selected));
        ls.selected.reset();
      } else {
        const auto& props = ls.runs.back().proposals;
        const auto& rec = props[rng() % props.size()];
        if (ls.selected) acc.remove(*find_proposal(p, *ls.selected));
        select_proposal(p, line, rec.id);
        acc.add(rec);
      }
      const StatsSummary full = compute_stats(p);
      CHECK(full == acc.summary());
      int sum = 0;
      for (const auto& [k, v] : full.by_movement) sum += v;
      CHECK(sum == full.total_shots);
    }
  }
  CHECK(code_of([&] { select_proposal(p, 1, p.line(2).runs.back().proposals[0].id); }) == ErrorCode::Validation);
}

TEST_CASE("export storyboard")
{
  TempDir dir("export");
  Studio studio(PREVIS_DEFAULT_ASSETS, dir.path);
  Project p = studio.create_project("exp", "apartment", small_render());
  studio.add_line(p, "(Anna walk-to door);(follow medium eye-level)");
  studio.add_line(p, "(Bob sing);(static close-up eye-level)");
  studio.add_line(p, "(Anna wave);(arc full eye-level)");
  for (int l = 1; l <= 3; ++l) studio.generate_line(p, l);

  const ProposalRecord* walk75 = first_with_frames(p.line(1).runs.back(), 75);
  const ProposalRecord* sing100 = first_with_frames(p.line(2).runs.back(), 100);
  REQUIRE(walk75);
  REQUIRE(sing100);
  select_proposal(p, 1, walk75->id);
  select_proposal(p, 2, sing100->id);

  try {
    studio.export_storyboard(p, dir.path / "out");
    FAIL("expected IncompleteSelection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteSelection);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }

  p.lines.pop_back();
  const auto manifest = studio.export_storyboard(p, dir.path / "out");
  CHECK(manifest["total_frames"] == 175);
  CHECK(manifest["shots"].size() == 2);
  CHECK(manifest["shots"][1]["start_frame"] == 75);
  CHECK(manifest["stats"]["total_shots"] == 2);
  CHECK(fs::exists(dir.path / "out" / "shots" / "line_001" / "frame_0074.png"));
  CHECK_FALSE(fs::exists(dir.path / "out" / "shots" / "line_001" / "frame_0075.png"));
  CHECK(fs::exists(dir.path / "out" / "shots" / "line_002_contact.png"));

  // A frame file hashes to the manifest entry.
  const std::string png = slurp(dir.path / "out" / "shots" / "line_002" / "frame_0010.png");
  CHECK(manifest["shots"][1]["frame_hashes"][10] ==
        hex64(fnv1a64(reinterpret_cast<const std::uint8_t*>(png.data()), png.size())));

  const std::string first = slurp(dir.path / "out" / "manifest.json");
  studio.export_storyboard(p, dir.path / "out2");
  CHECK(slurp(dir.path / "out2" / "manifest.json") == first);

  // A fresh studio reloading the project reproduces the same export.
  studio.store().save(p);
  Studio other(PREVIS_DEFAULT_ASSETS, dir.path);
  other.export_storyboard(other.store().load("exp"), dir.path / "out3");
  CHECK(slurp(dir.path / "out3" / "manifest.json") == first);
}

TEST_CASE("model ranking uses the checkpoint")
{
  TempDir dir("model");
  Studio studio(PREVIS_DEFAULT_ASSETS, dir.path);
  RankerConfig cfg;
  cfg.queue_size = 32;
  studio.set_model(RankerModel(cfg));
  Project p = studio.create_project("mdl", "apartment", small_render());
  studio.add_line(p, "(Bob wave);(static medium eye-level)");
  const auto& run = studio.generate_line(p, 1);
  CHECK(run.ranker == "model");
  for (const auto& r : run.proposals) {
    CHECK(r.score > 0.0);
    CHECK(r.score < 1.0);
  }
  studio.set_model(std::nullopt);
  CHECK(studio.generate_line(p, 1).ranker == "metric");
}
