#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace previs {

enum class ErrorCode {
  Syntax,
  UnknownToken,
  Schema,
  DuplicateId,
  CycleDetected,
  UnknownTarget,
  UnknownCharacter,
  UnknownVerb,
  Unreachable,
  StartBlocked,
  GoalBlocked,
  SpeedLimit,
  FrameOutOfRange,
  DegenerateLookAt,
  Domain,
  LengthMismatch,
  NotFound,
  VersionMismatch,
  IncompleteSelection,
  Validation,
  NumericalFailure,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure inside a script tuple. `offset` is the byte offset of the
/// offending token within the text handed to the parser; `field` names the
/// tuple slot (e.g. "movement") when the failure is a closed-enum miss.
class ScriptError : public Error {
 public:
  ScriptError(ErrorCode code, const std::string& message, std::size_t offset,
              std::string field = {}, std::string token = {})
      : Error(code, message),
        offset_(offset),
        field_(std::move(field)),
        token_(std::move(token)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t offset_;
  std::string field_;
  std::string token_;
};

}  // namespace previs
