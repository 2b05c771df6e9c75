#pragma once

#include "previs/assets.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace previs {

class SceneGraph;

enum class Movement { Static, Follow, Push, Pull, ZoomIn, ZoomOut, Tilt, Pan, Dolly, Pedestal, Arc };
enum class ShotScale { CloseUp, Medium, Full };
enum class ShotAngle { EyeLevel, High, Low };

inline constexpr std::array<Movement, 11> kAllMovements{
    Movement::Static, Movement::Follow, Movement::Push,  Movement::Pull,
    Movement::ZoomIn, Movement::ZoomOut, Movement::Tilt, Movement::Pan,
    Movement::Dolly,  Movement::Pedestal, Movement::Arc};
inline constexpr std::array<ShotScale, 3> kAllScales{ShotScale::CloseUp, ShotScale::Medium,
                                                     ShotScale::Full};
inline constexpr std::array<ShotAngle, 3> kAllAngles{ShotAngle::EyeLevel, ShotAngle::High,
                                                     ShotAngle::Low};

// Canonical tokens are the hyphenated spellings ("zoom-in", "close-up", "eye-level").
std::string_view to_token(Movement m);
std::string_view to_token(ShotScale s);
std::string_view to_token(ShotAngle a);

// Alias-aware lookups. Tokens are case-sensitive.
std::optional<Movement> movement_from_token(std::string_view token);
std::optional<ShotScale> scale_from_token(std::string_view token);
std::optional<ShotAngle> angle_from_token(std::string_view token);

/// Every accepted spelling mapped to its canonical token, per field.
const std::map<std::string, std::string, std::less<>>& movement_aliases();
const std::map<std::string, std::string, std::less<>>& scale_aliases();
const std::map<std::string, std::string, std::less<>>& angle_aliases();

struct StoryScript {
  std::string character_id;
  std::string action_verb;
  std::optional<std::string> target_ref;

  bool operator==(const StoryScript&) const = default;
};

struct CameraScript {
  Movement movement = Movement::Static;
  ShotScale scale = ShotScale::Medium;
  ShotAngle angle = ShotAngle::EyeLevel;

  bool operator==(const CameraScript&) const = default;
};

struct ScriptLine {
  int index = 0;  // 1-based, contiguous within a project
  StoryScript story;
  CameraScript camera;
  std::string raw_text;

  bool operator==(const ScriptLine&) const = default;
};

/// Verb arity: which verbs must carry a target. Verbs absent from the table
/// accept either arity; asset validation reports them separately.
struct VerbTable {
  std::map<std::string, bool, std::less<>> requires_target;

  static VerbTable from_registry(const AssetRegistry& registry);
};

const VerbTable& default_verb_table();

StoryScript parse_story_script(std::string_view text,
                               const VerbTable& verbs = default_verb_table());
CameraScript parse_camera_script(std::string_view text);

std::string format_story(const StoryScript& s);
std::string format_camera(const CameraScript& c);
std::string format_line(const ScriptLine& line);

/// Parses a whole script document: one `story ; camera` pair per line, `#`
/// comment lines and blank lines skipped. Errors carry the 1-based source line
/// in their message and the byte offset within the document.
std::vector<ScriptLine> parse_script_document(std::string_view text,
                                              const VerbTable& verbs = default_verb_table());
ScriptLine parse_script_line(std::string_view text, int index,
                             const VerbTable& verbs = default_verb_table());

enum class IssueKind { UnknownCharacter, UnknownVerb, UnknownTarget, MissingTarget, UnexpectedTarget };
std::string_view to_string(IssueKind k);

struct ValidationIssue {
  IssueKind kind;
  std::string identifier;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
};

/// Never throws. The target is checked against `scene` when one is supplied.
ValidationReport validate_against_assets(const StoryScript& script, const AssetRegistry& registry,
                                         const SceneGraph* scene = nullptr);

}  // namespace previs
