#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptprobe/util.hpp"

namespace adaptprobe {

inline constexpr int kOptionCount = 5;
inline constexpr int kDefaultQuestionCount = 18;

struct SurveyOption {
  int id = 0;
  std::string label;
  bool operator==(const SurveyOption&) const = default;
};

struct SurveyQuestion {
  int id = 0;
  std::string text;
  std::array<SurveyOption, kOptionCount> options;  // options[k] has id k+1
  bool operator==(const SurveyQuestion&) const = default;
};

class Survey {
 public:
  Survey() = default;
  /// Validates and takes ownership; ids must be unique and contiguous from 1.
  explicit Survey(std::vector<SurveyQuestion> questions);

  std::size_t m() const noexcept { return questions_.size(); }
  const std::vector<SurveyQuestion>& questions() const noexcept { return questions_; }
  const SurveyQuestion& question(int id) const;
  bool operator==(const Survey&) const = default;

 private:
  std::vector<SurveyQuestion> questions_;
};

enum class EducationLevel { HighSchool = 0, Bachelor = 1, Master = 2, PhD = 3 };

std::string_view to_string(EducationLevel level);
EducationLevel parse_education_level(std::string_view text);

struct UserProfile {
  std::string user_id;
  int age = 0;
  std::string gender;
  std::string job_title;
  EducationLevel education_level = EducationLevel::HighSchool;
  std::string nationality;
  bool operator==(const UserProfile&) const = default;
};

enum class Role { User, Assistant };
std::string_view to_string(Role role);

struct DialogueTurn {
  Role role = Role::User;
  std::string content;
  bool operator==(const DialogueTurn&) const = default;
};

struct GenerationMeta {
  std::map<std::string, std::string> models;  // role -> model name
  std::uint64_t seed = 0;
  std::string timestamp;
  bool operator==(const GenerationMeta&) const = default;
};

struct Dialogue {
  std::string user_id;
  std::vector<DialogueTurn> turns;
  GenerationMeta generation_meta;
  bool operator==(const Dialogue&) const = default;
};

/// Normalized probabilities over option ids 1..5; probs[k] belongs to id k+1.
class OptionDistribution {
 public:
  OptionDistribution() = default;

  /// Divides non-negative masses by their sum. Throws InvalidDistribution when
  /// a mass is negative or non-finite, or all masses are zero.
  static OptionDistribution from_masses(const std::array<double, kOptionCount>& masses);
  /// Already-normalized values as read from a file; |sum-1| must be <= 1e-9.
  static OptionDistribution from_normalized(const std::array<double, kOptionCount>& probs,
                                            bool degenerate = false);
  static OptionDistribution one_hot(int option_id, bool degenerate);

  const std::array<double, kOptionCount>& probs() const noexcept { return probs_; }
  double operator[](std::size_t k) const { return probs_[k]; }
  double max() const;
  /// Option id of the largest probability, lowest id on ties.
  int argmax_id() const;
  bool degenerate() const noexcept { return degenerate_; }
  bool operator==(const OptionDistribution&) const = default;

 private:
  std::array<double, kOptionCount> probs_{};
  bool degenerate_ = false;
};

enum class Scenario { Profile, Dialogue };
std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  bool operator==(const TokenLogprob&) const = default;
};

/// Bookkeeping attached to every probe answer.
struct ProbeMeta {
  int model_selected_option_id = 0;  // id as reported by the model before argmax reconciliation
  int upstream_calls = 1;
  int source_position = -1;          // token index the distribution was read from
  bool empty_reasoning = false;
  std::string reasoning_text;
  bool operator==(const ProbeMeta&) const = default;
};

struct ProbeResponse {
  std::string user_id;
  int question_id = 0;
  Scenario scenario = Scenario::Profile;
  int selected_option_id = 0;
  std::string justification;
  OptionDistribution distribution;
  std::vector<TokenLogprob> raw_logprobs;
  ProbeMeta meta;
  bool operator==(const ProbeResponse&) const = default;
};

struct SelectionSequence {
  std::string user_id;
  Scenario scenario = Scenario::Profile;
  std::vector<int> values;  // values[j-1] answers question j
};

// Validation (throws Error on violation).
void validate(const SurveyQuestion& q);
void validate(const UserProfile& p);
void validate(const Dialogue& d);
void validate(const ProbeResponse& r);

// JSON mapping, used by the loaders below and by the writers.
json to_json(const Survey& s);
json to_json(const UserProfile& p);
json to_json(const Dialogue& d);
json to_json(const ProbeResponse& r);
Survey survey_from_json(const json& doc);
UserProfile profile_from_json(const json& rec);
Dialogue dialogue_from_json(const json& rec);
ProbeResponse response_from_json(const json& rec);

Survey load_survey(const std::filesystem::path& path);
std::vector<UserProfile> load_profiles(const std::filesystem::path& path);
std::vector<Dialogue> load_dialogues(const std::filesystem::path& path);
std::vector<ProbeResponse> load_responses(const std::filesystem::path& path);

std::vector<UserProfile> parse_profiles(const JsonLines& lines);
std::vector<Dialogue> parse_dialogues(const JsonLines& lines);
std::vector<ProbeResponse> parse_responses(const JsonLines& lines);

/// Orders one user's answers for one scenario by question id.
SelectionSequence assemble_sequence(std::span<const ProbeResponse> responses, const Survey& survey);

}  // namespace adaptprobe
