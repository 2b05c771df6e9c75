#include "previs/error.hpp"

namespace previs {

std::string_view to_string(ErrorCode code)
{
  switch (code) {
  case ErrorCode::Syntax: return "SyntaxError";
  case ErrorCode::UnknownToken: return "UnknownToken";
  case ErrorCode::Schema: return "SchemaError";
  case ErrorCode::DuplicateId: return "DuplicateId";
  case ErrorCode::CycleDetected: return "CycleDetected";
  case ErrorCode::UnknownTarget: return "UnknownTarget";
  case ErrorCode::UnknownCharacter: return "UnknownCharacter";
  case ErrorCode::UnknownVerb: return "UnknownVerb";
  case ErrorCode::Unreachable: return "Unreachable";
  case ErrorCode::StartBlocked: return "StartBlocked";
  case ErrorCode::GoalBlocked: return "GoalBlocked";
  case ErrorCode::SpeedLimit: return "SpeedLimit";
  case ErrorCode::FrameOutOfRange: return "FrameOutOfRange";
  case ErrorCode::DegenerateLookAt: return "DegenerateLookAt";
  case ErrorCode::Domain: return "DomainError";
  case ErrorCode::LengthMismatch: return "LengthMismatch";
  case ErrorCode::NotFound: return "NotFound";
  case ErrorCode::VersionMismatch: return "VersionMismatch";
  case ErrorCode::IncompleteSelection: return "IncompleteSelection";
  case ErrorCode::Validation: return "ValidationError";
  case ErrorCode::NumericalFailure: return "NumericalFailure";
  case ErrorCode::Io: return "IoError";
  }
  return "Error";
}

}  // namespace previs
