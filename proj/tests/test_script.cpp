#include "previs/assets.hpp"
#include "previs/error.hpp"
#include "previs/scene.hpp"
#include "previs/script.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace previs;

namespace {

template <class F>
ErrorCode code_of(F&& f)
{
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

AssetRegistry small_registry()
{
  return parse_registry(nlohmann::json::parse(R"({
    "schema_version": 1,
    "characters": {"Anna": {"height_m": 1.6}},
    "verbs": {"walk-to": {"locomotion": true, "clips": ["w1"]}, "sing": {"clips": ["s1"]}},
    "scenes": {}
  })"));
}

}  // namespace

TEST_CASE("story tuples")
{
  const StoryScript a = parse_story_script("(Anna walk-to door)");
  CHECK(a.character_id == "Anna");
  CHECK(a.action_verb == "walk-to");
  REQUIRE(a.target_ref);
  CHECK(*a.target_ref == "door");

  const StoryScript b = parse_story_script("(Bob sing)");
  CHECK(b.character_id == "Bob");
  CHECK(b.action_verb == "sing");
  CHECK_FALSE(b.target_ref);

  CHECK(code_of([] { parse_story_script("(Anna walk-to)"); }) == ErrorCode::Syntax);
  CHECK(code_of([] { parse_story_script("(Bob sing loudly)"); }) == ErrorCode::Syntax);
  CHECK(code_of([] { parse_story_script("Anna walk-to door"); }) == ErrorCode::Syntax);
  CHECK(code_of([] { parse_story_script("(Anna walk-to door"); }) == ErrorCode::Syntax);
  CHECK(code_of([] { parse_story_script("(Anna)"); }) == ErrorCode::Syntax);
  CHECK(code_of([] { parse_story_script("(a b c d)"); }) == ErrorCode::Syntax);
}

TEST_CASE("syntax errors carry the byte offset")
{
  try {
    parse_story_script("(Anna walk-to door) x");
    FAIL("no error");
  } catch (const ScriptError& e) {
    CHECK(e.offset() == 20);
  }
  try {
    parse_story_script("(Anna walk-to)");
    FAIL("no error");
  } catch (const ScriptError& e) {
    CHECK(e.offset() == 6);  // the verb needing a target
  }
}

TEST_CASE("camera tuples")
{
  const CameraScript a = parse_camera_script("(follow medium eye-level)");
  CHECK(a.movement == Movement::Follow);
  CHECK(a.scale == ShotScale::Medium);
  CHECK(a.angle == ShotAngle::EyeLevel);

  const CameraScript b = parse_camera_script("(arc close-up low)");
  CHECK(b.movement == Movement::Arc);
  CHECK(b.scale == ShotScale::CloseUp);
  CHECK(b.angle == ShotAngle::Low);

  CHECK(parse_camera_script("(zoom_in full eye_level)") == CameraScript{Movement::ZoomIn, ShotScale::Full, ShotAngle::EyeLevel});

  try {
    parse_camera_script("(hover medium eye-level)");
    FAIL("no error");
  } catch (const ScriptError& e) {
    CHECK(e.code() == ErrorCode::UnknownToken);
    CHECK(e.field() == "movement");
    CHECK(e.token() == "hover");
    CHECK(e.offset() == 1);
  }
  try {
    parse_camera_script("(pan medium sideways)");
    FAIL("no error");
  } catch (const ScriptError& e) {
    CHECK(e.field() == "angle");
    CHECK(e.token() == "sideways");
  }
  CHECK(code_of([] { parse_camera_script("(pan medium)"); }) == ErrorCode::Syntax);
}

TEST_CASE("enum closure")
{
  std::set<std::string> movements, scales, angles;
  for (const auto& [alias, canon] : movement_aliases()) movements.insert(canon);
  for (const auto& [alias, canon] : scale_aliases()) scales.insert(canon);
  for (const auto& [alias, canon] : angle_aliases()) angles.insert(canon);
  CHECK(movements == std::set<std::string>{"static", "follow", "push", "pull", "zoom-in", "zoom-out", "tilt", "pan",
                                           "dolly", "pedestal", "arc"});
  CHECK(scales == std::set<std::string>{"close-up", "medium", "full"});
  CHECK(angles == std::set<std::string>{"eye-level", "high", "low"});
  for (Movement m : kAllMovements) CHECK(movement_from_token(to_token(m)) == m);
  CHECK_FALSE(movement_from_token("Static"));  // case-sensitive
}

TEST_CASE("round trip over generated tuples")
{
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::string, std::string>> ma(movement_aliases().begin(), movement_aliases().end());
  std::vector<std::pair<std::string, std::string>> sa(scale_aliases().begin(), scale_aliases().end());
  std::vector<std::pair<std::string, std::string>> aa(angle_aliases().begin(), angle_aliases().end());
  const std::vector<std::string> chars{"Anna", "Bob", "kim_2"};
  const std::vector<std::pair<std::string, bool>> verbs{{"walk-to", true}, {"sing", false}, {"open", true}, {"wave", false}};
  const std::vector<std::string> targets{"door", "sofa", "table-1"};
  for (int i = 0; i < 500; ++i) {
    const auto& m = ma[rng() % ma.size()];
    const auto& s = sa[rng() % sa.size()];
    const auto& a = aa[rng() % aa.size()];
    const auto& v = verbs[rng() % verbs.size()];
    const std::string c = chars[rng() % chars.size()];
    const std::string target = v.second ? " " + targets[rng() % targets.size()] : "";
    const std::string sp = std::string(1 + rng() % 3, ' ');
    const std::string text = "(" + sp + c + sp + v.first + target + ")" + sp + ";(" + m.first + sp + s.first + " " +
                             a.first + sp + ")";
    const std::string canonical = "(" + c + " " + v.first + target + ");(" + m.second + " " + s.second + " " +
                                  a.second + ")";
    const ScriptLine line = parse_script_line(text, 1);
    CHECK(format_line(line) == canonical);
    CHECK(parse_script_line(format_line(line), 1).story == line.story);
  }
}

TEST_CASE("parser is total")
{
  std::mt19937_64 rng(11);
  const std::string alphabet = "()abAB -_;#\t9xz\xff";
  for (int i = 0; i < 5000; ++i) {
    std::string s(rng() % 24, ' ');
    for (auto& ch : s) ch = alphabet[rng() % alphabet.size()];
    try {
      parse_script_line(s, 1);
    } catch (const ScriptError& e) {
      CHECK(e.offset() <= s.size());
    }
  }
}

TEST_CASE("documents skip comments and report source lines")
{
  const auto lines = parse_script_document("# header\n\n(Anna walk-to door);(follow medium eye-level)\n  (Bob sing);(static full low)\n");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].index == 1);
  CHECK(lines[1].index == 2);
  CHECK(lines[1].camera.angle == ShotAngle::Low);
  try {
    parse_script_document("(Bob sing);(static full low)\n(Bob sing);(hover full low)\n");
    FAIL("no error");
  } catch (const ScriptError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(e.offset() == 29 + 12);
  }
  CHECK(code_of([] { parse_script_line("(Bob sing);(static full low);(pan full low)", 1); }) == ErrorCode::Syntax);
}

TEST_CASE("asset validation reports without throwing")
{
  const AssetRegistry reg = small_registry();
  const SceneGraph scene = parse_scene(nlohmann::json::parse(R"({"schema_version":1,"nodes":[
    {"id":"root","kind":"scene","children":["room"]},
    {"id":"room","kind":"room","half_extents":[5,5,0],"children":["door"]},
    {"id":"door","kind":"object","position":[4,0,1],"half_extents":[0.1,0.5,1]}]})"));

  CHECK(validate_against_assets(parse_story_script("(Anna walk-to door)"), reg, &scene).ok());

  const auto zed = validate_against_assets(parse_story_script("(Zed walk-to door)"), reg, &scene);
  REQUIRE(zed.issues.size() == 1);
  CHECK(zed.issues[0] == ValidationIssue{IssueKind::UnknownCharacter, "Zed"});
  CHECK(to_string(zed.issues[0].kind) == "unknown_character");

  const auto moon = validate_against_assets(parse_story_script("(Anna moonwalk door)"), reg, &scene);
  REQUIRE(moon.issues.size() == 1);
  CHECK(moon.issues[0] == ValidationIssue{IssueKind::UnknownVerb, "moonwalk"});

  const auto window = validate_against_assets(parse_story_script("(Anna walk-to window)"), reg, &scene);
  REQUIRE(window.issues.size() == 1);
  CHECK(window.issues[0] == ValidationIssue{IssueKind::UnknownTarget, "window"});

  const VerbTable verbs = VerbTable::from_registry(reg);
  CHECK(verbs.requires_target.at("walk-to"));
  CHECK_FALSE(verbs.requires_target.at("sing"));
}
