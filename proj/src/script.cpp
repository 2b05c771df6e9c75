#include "previs/script.hpp"

#include "previs/error.hpp"
#include "previs/scene.hpp"

#include <cctype>

namespace previs {

namespace {

using AliasMap = std::map<std::string, std::string, std::less<>>;

struct Token {
  std::string_view text;
  std::size_t offset;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

bool is_ident_char(char c)
{
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-';
}

bool is_ident_start(char c)
{
  const auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_';
}

[[noreturn]] void syntax(const std::string& msg, std::size_t offset)
{
  throw ScriptError(ErrorCode::Syntax, msg + " at byte " + std::to_string(offset), offset);
}

// Splits "( a b c )" into its inner tokens; offsets are relative to `text`.
std::vector<Token> tokenize_tuple(std::string_view text)
{
  std::size_t i = 0;
  while (i < text.size() && is_space(text[i])) ++i;
  if (i == text.size()) syntax("empty tuple", i);
  if (text[i] != '(') syntax("expected '('", i);
  ++i;

  std::vector<Token> tokens;
  bool closed = false;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == ')') {
      closed = true;
      ++i;
      break;
    }
    if (!is_ident_start(c)) syntax(std::string("unexpected character '") + c + "'", i);
    const std::size_t start = i;
    while (i < text.size() && is_ident_char(text[i])) ++i;
    if (i < text.size() && !is_space(text[i]) && text[i] != ')')
      syntax(std::string("unexpected character '") + text[i] + "'", i);
    tokens.push_back({text.substr(start, i - start), start});
  }
  if (!closed) syntax("missing ')'", text.size());
  while (i < text.size() && is_space(text[i])) ++i;
  if (i != text.size()) syntax("trailing characters after ')'", i);
  return tokens;
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const AliasMap& aliases, const std::array<Enum, N>& all,
                           std::string_view token)
{
  auto it = aliases.find(token);
  if (it == aliases.end()) return std::nullopt;
  for (Enum e : all)
    if (to_token(e) == it->second) return e;
  return std::nullopt;
}

ScriptError shift(const ScriptError& e, std::size_t by, const std::string& context)
{
  // Keep the "at byte N" suffix in step with the shifted offset.
  std::string msg = e.what();
  const std::string suffix = " at byte " + std::to_string(e.offset());
  if (msg.size() >= suffix.size() && msg.compare(msg.size() - suffix.size(), suffix.size(), suffix) == 0)
    msg.replace(msg.size() - suffix.size(), suffix.size(), " at byte " + std::to_string(e.offset() + by));
  return ScriptError(e.code(), context + msg, e.offset() + by, e.field(), e.token());
}

}  // namespace

std::string_view to_token(Movement m)
{
  switch (m) {
  case Movement::Static: return "static";
  case Movement::Follow: return "follow";
  case Movement::Push: return "push";
  case Movement::Pull: return "pull";
  case Movement::ZoomIn: return "zoom-in";
  case Movement::ZoomOut: return "zoom-out";
  case Movement::Tilt: return "tilt";
  case Movement::Pan: return "pan";
  case Movement::Dolly: return "dolly";
  case Movement::Pedestal: return "pedestal";
  case Movement::Arc: return "arc";
  }
  return "static";
}

std::string_view to_token(ShotScale s)
{
  switch (s) {
  case ShotScale::CloseUp: return "close-up";
  case ShotScale::Medium: return "medium";
  case ShotScale::Full: return "full";
  }
  return "medium";
}

std::string_view to_token(ShotAngle a)
{
  switch (a) {
  case ShotAngle::EyeLevel: return "eye-level";
  case ShotAngle::High: return "high";
  case ShotAngle::Low: return "low";
  }
  return "eye-level";
}

const AliasMap& movement_aliases()
{
  static const AliasMap m{
      {"static", "static"},     {"follow", "follow"},     {"push", "push"},
      {"push-in", "push"},      {"push_in", "push"},      {"pull", "pull"},
      {"pull-out", "pull"},     {"pull_out", "pull"},     {"zoom-in", "zoom-in"},
      {"zoom_in", "zoom-in"},   {"zoom-out", "zoom-out"}, {"zoom_out", "zoom-out"},
      {"tilt", "tilt"},         {"pan", "pan"},           {"dolly", "dolly"},
      {"pedestal", "pedestal"}, {"arc", "arc"},
  };
  return m;
}

const AliasMap& scale_aliases()
{
  static const AliasMap m{
      {"close-up", "close-up"}, {"close_up", "close-up"}, {"closeup", "close-up"},
      {"medium", "medium"},     {"full", "full"},
  };
  return m;
}

const AliasMap& angle_aliases()
{
  static const AliasMap m{
      {"eye-level", "eye-level"}, {"eye_level", "eye-level"}, {"high", "high"},
      {"high-angle", "high"},     {"high_angle", "high"},     {"low", "low"},
      {"low-angle", "low"},       {"low_angle", "low"},
  };
  return m;
}

std::optional<Movement> movement_from_token(std::string_view token)
{
  return lookup(movement_aliases(), kAllMovements, token);
}

std::optional<ShotScale> scale_from_token(std::string_view token)
{
  return lookup(scale_aliases(), kAllScales, token);
}

std::optional<ShotAngle> angle_from_token(std::string_view token)
{
  return lookup(angle_aliases(), kAllAngles, token);
}

VerbTable VerbTable::from_registry(const AssetRegistry& registry)
{
  VerbTable t;
  for (const auto& [verb, asset] : registry.verbs) t.requires_target[verb] = asset.requires_target;
  return t;
}

const VerbTable& default_verb_table()
{
  static const VerbTable table = [] {
    VerbTable t;
    for (const char* v : {"walk-to", "run-to", "go-to", "pick-up", "open", "sit-on", "look-at", "talk-to"})
      t.requires_target[v] = true;
    for (const char* v : {"sing", "wave", "dance", "jump", "sit", "stand", "cry", "laugh", "idle"})
      t.requires_target[v] = false;
    return t;
  }();
  return table;
}

StoryScript parse_story_script(std::string_view text, const VerbTable& verbs)
{
  const auto tokens = tokenize_tuple(text);
  if (tokens.size() < 2 || tokens.size() > 3) {
    const std::size_t at = tokens.size() > 3 ? tokens[3].offset : text.size();
    syntax("story tuple takes 2 or 3 tokens, got " + std::to_string(tokens.size()), at);
  }

  StoryScript s;
  s.character_id = std::string(tokens[0].text);
  s.action_verb = std::string(tokens[1].text);
  if (tokens.size() == 3) s.target_ref = std::string(tokens[2].text);

  if (auto it = verbs.requires_target.find(s.action_verb); it != verbs.requires_target.end()) {
    if (it->second && !s.target_ref)
      syntax("verb '" + s.action_verb + "' requires a target", tokens[1].offset);
    if (!it->second && s.target_ref)
      syntax("verb '" + s.action_verb + "' takes no target", tokens[2].offset);
  }
  return s;
}

CameraScript parse_camera_script(std::string_view text)
{
  const auto tokens = tokenize_tuple(text);
  if (tokens.size() != 3) {
    const std::size_t at = tokens.size() > 3 ? tokens[3].offset : text.size();
    syntax("camera tuple takes 3 tokens, got " + std::to_string(tokens.size()), at);
  }

  auto unknown = [](const Token& t, const char* field) {
    return ScriptError(ErrorCode::UnknownToken,
                       std::string("unknown ") + field + " token '" + std::string(t.text) + "' at byte " +
                           std::to_string(t.offset),
                       t.offset, field, std::string(t.text));
  };

  CameraScript c;
  if (auto m = movement_from_token(tokens[0].text)) c.movement = *m;
  else throw unknown(tokens[0], "movement");
  if (auto s = scale_from_token(tokens[1].text)) c.scale = *s;
  else throw unknown(tokens[1], "scale");
  if (auto a = angle_from_token(tokens[2].text)) c.angle = *a;
  else throw unknown(tokens[2], "angle");
  return c;
}

std::string format_story(const StoryScript& s)
{
  std::string out = "(" + s.character_id + " " + s.action_verb;
  if (s.target_ref) out += " " + *s.target_ref;
  return out + ")";
}

std::string format_camera(const CameraScript& c)
{
  std::string out = "(";
  out += to_token(c.movement);
  out += " ";
  out += to_token(c.scale);
  out += " ";
  out += to_token(c.angle);
  return out + ")";
}

std::string format_line(const ScriptLine& line)
{
  return format_story(line.story) + ";" + format_camera(line.camera);
}

ScriptLine parse_script_line(std::string_view text, int index, const VerbTable& verbs)
{
  const std::size_t sep = text.find(';');
  if (sep == std::string_view::npos) syntax("expected 'story ; camera'", text.size());
  if (text.find(';', sep + 1) != std::string_view::npos)
    syntax("exactly one camera script per line", text.find(';', sep + 1));

  ScriptLine line;
  line.index = index;
  line.raw_text = std::string(text);
  line.story = parse_story_script(text.substr(0, sep), verbs);
  try {
    line.camera = parse_camera_script(text.substr(sep + 1));
  } catch (const ScriptError& e) {
    throw shift(e, sep + 1, "");
  }
  return line;
}

std::vector<ScriptLine> parse_script_document(std::string_view text, const VerbTable& verbs)
{
  std::vector<ScriptLine> lines;
  std::size_t pos = 0;
  int source_line = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++source_line;

    std::size_t first = 0;
    while (first < raw.size() && is_space(raw[first])) ++first;
    if (first < raw.size() && raw[first] != '#') {
      std::size_t last = raw.size();
      while (last > first && is_space(raw[last - 1])) --last;
      try {
        lines.push_back(parse_script_line(raw.substr(first, last - first),
                                          static_cast<int>(lines.size()) + 1, verbs));
      } catch (const ScriptError& e) {
        throw shift(e, pos + first, "line " + std::to_string(source_line) + ": ");
      }
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

std::string_view to_string(IssueKind k)
{
  switch (k) {
  case IssueKind::UnknownCharacter: return "unknown_character";
  case IssueKind::UnknownVerb: return "unknown_verb";
  case IssueKind::UnknownTarget: return "unknown_target";
  case IssueKind::MissingTarget: return "missing_target";
  case IssueKind::UnexpectedTarget: return "unexpected_target";
  }
  return "unknown";
}

ValidationReport validate_against_assets(const StoryScript& script, const AssetRegistry& registry,
                                         const SceneGraph* scene)
{
  ValidationReport report;
  if (!registry.characters.contains(script.character_id))
    report.issues.push_back({IssueKind::UnknownCharacter, script.character_id});

  auto verb = registry.verbs.find(script.action_verb);
  if (verb == registry.verbs.end() || verb->second.clips.empty()) {
    report.issues.push_back({IssueKind::UnknownVerb, script.action_verb});
  } else if (verb->second.requires_target && !script.target_ref) {
    report.issues.push_back({IssueKind::MissingTarget, script.action_verb});
  } else if (!verb->second.requires_target && script.target_ref) {
    report.issues.push_back({IssueKind::UnexpectedTarget, *script.target_ref});
  }

  if (script.target_ref && scene && !scene->find(*script.target_ref))
    report.issues.push_back({IssueKind::UnknownTarget, *script.target_ref});
  return report;
}

}  // namespace previs
