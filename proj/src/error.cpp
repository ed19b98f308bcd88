#include "adaptprobe/error.hpp"

namespace adaptprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return "Config";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateUserId: return "DuplicateUserId";
    case ErrorCode::FieldOutOfRange: return "FieldOutOfRange";
    case ErrorCode::UnknownEducationLevel: return "UnknownEducationLevel";
    case ErrorCode::MissingQuestion: return "MissingQuestion";
    case ErrorCode::DuplicateQuestion: return "DuplicateQuestion";
    case ErrorCode::MixedUsersOrScenarios: return "MixedUsersOrScenarios";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedUpstreamPayload: return "MalformedUpstreamPayload";
    case ErrorCode::SchemaValidationExhausted: return "SchemaValidationExhausted";
    case ErrorCode::UnparseableSimulatorOutput: return "UnparseableSimulatorOutput";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::TemplatePlaceholderMissing: return "TemplatePlaceholderMissing";
    case ErrorCode::EmptyDialogue: return "EmptyDialogue";
    case ErrorCode::OptionTokenNotLocated: return "OptionTokenNotLocated";
    case ErrorCode::UnansweredItems: return "UnansweredItems";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::NoSharedQuestions: return "NoSharedQuestions";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::UnmatchedPair: return "UnmatchedPair";
    case ErrorCode::TooFewUsers: return "TooFewUsers";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateBetweenVariance: return "DegenerateBetweenVariance";
    case ErrorCode::IncompleteMatrix: return "IncompleteMatrix";
    case ErrorCode::MissingAux: return "MissingAux";
    case ErrorCode::UnmappedValue: return "UnmappedValue";
    case ErrorCode::UnmappedCountry: return "UnmappedCountry";
    case ErrorCode::NoRuleMatched: return "NoRuleMatched";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::MissingFile:
      return 1;
    case ErrorCode::Transport:
    case ErrorCode::RateLimited:
    case ErrorCode::MalformedUpstreamPayload:
    case ErrorCode::SchemaValidationExhausted:
    case ErrorCode::UnparseableSimulatorOutput:
    case ErrorCode::UnparseableVerdict:
    case ErrorCode::ScoreOutOfRange:
    case ErrorCode::UnansweredItems:
      return 2;
    default:
      return 3;
  }
}

}  // namespace adaptprobe
