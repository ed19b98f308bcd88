#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adaptprobe {

enum class ErrorCode {
  // configuration / usage
  Config,
  MissingFile,
  // survey_model
  SchemaViolation,
  DuplicateUserId,
  FieldOutOfRange,
  UnknownEducationLevel,
  MissingQuestion,
  DuplicateQuestion,
  MixedUsersOrScenarios,
  // llm_gateway
  Transport,
  RateLimited,
  MalformedUpstreamPayload,
  SchemaValidationExhausted,
  // dialogue_factory / quality_judge
  UnparseableSimulatorOutput,
  UnparseableVerdict,
  PreconditionViolation,
  ScoreOutOfRange,
  // value_probe
  TemplatePlaceholderMissing,
  EmptyDialogue,
  OptionTokenNotLocated,
  UnansweredItems,
  // metrics / statistics
  EmptyInput,
  EmptyGroup,
  InvalidDistribution,
  NoSharedQuestions,
  LengthMismatch,
  ValueOutOfRange,
  UnmatchedPair,
  TooFewUsers,
  ZeroBaseline,
  ZeroVariance,
  DegenerateBetweenVariance,
  IncompleteMatrix,
  // cohorts
  MissingAux,
  UnmappedValue,
  UnmappedCountry,
  NoRuleMatched,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for a failure of the given kind:
/// 1 usage/config, 2 upstream/model, 3 data/validation.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Raised when structured output never validated. Keeps the last raw model
/// text and, for two-pass calls, the reasoning captured in pass one.
class StructuredOutputError : public Error {
 public:
  StructuredOutputError(const std::string& message, std::string last_raw, std::string reasoning = {})
      : Error(ErrorCode::SchemaValidationExhausted, message),
        last_raw_(std::move(last_raw)),
        reasoning_(std::move(reasoning)) {}

  const std::string& last_raw_text() const noexcept { return last_raw_; }
  const std::string& reasoning_text() const noexcept { return reasoning_; }

 private:
  std::string last_raw_;
  std::string reasoning_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace adaptprobe
