#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptprobe/llm_gateway.hpp"
#include "adaptprobe/survey_model.hpp"
#include "adaptprobe/templates.hpp"

namespace adaptprobe {

enum class ScenarioSelection { Profile, Dialogue, Both };
ScenarioSelection parse_scenario_selection(std::string_view text);
std::string_view to_string(ScenarioSelection s);

struct ProbeConfig {
  EndpointConfig target;
  bool reasoning_mode = false;
  TemplateSet templates = TemplateSet::probe_defaults();
  std::uint64_t seed = 0;
  int item_retries = 2;  // extra attempts per item after a failure
  int workers = 0;       // 0 = target.max_concurrency

  void validate() const;
};

/// Option log probabilities read at one output position. Options that did
/// not appear among the alternatives stay empty.
struct RawOptionLogprobs {
  std::array<std::optional<double>, kOptionCount> logprobs;
  int source_position = -1;
};

struct Extraction {
  OptionDistribution distribution;
  RawOptionLogprobs raw;
  std::vector<TokenLogprob> alternatives;  // everything offered at source_position
};

OutputSchema probe_schema();

std::vector<ChatMessage> render_profile_prompt(const TemplateSet& templates, const UserProfile& profile,
                                               const SurveyQuestion& question);
std::vector<ChatMessage> render_dialogue_prompt(const TemplateSet& templates, const Dialogue& dialogue,
                                                const SurveyQuestion& question);

/// Finds the first token after the "selected_option_id" field name whose
/// trimmed text is the selected digit, maps its top alternatives "1".."5" to
/// option probabilities, and normalizes. Options absent from the
/// alternatives get 0. When no option survives, returns a degenerate one-hot
/// at the parsed id.
Extraction extract_option_distribution(const ChatResponse& response, const json& parsed);

class ValueProbe {
 public:
  ValueProbe(Gateway& gateway, ProbeConfig cfg);

  ProbeResponse probe_one(const SurveyQuestion& question, const UserProfile& profile) const;
  ProbeResponse probe_one(const SurveyQuestion& question, const Dialogue& dialogue) const;

  /// Every (user, scenario, question) item, ordered by user_id, scenario
  /// (profile first), question_id. Throws UnansweredItems if any item still
  /// fails after its retries.
  std::vector<ProbeResponse> probe_run(const Survey& survey, const std::vector<UserProfile>& profiles,
                                       const std::vector<Dialogue>& dialogues,
                                       ScenarioSelection scenarios = ScenarioSelection::Both) const;

 private:
  ProbeResponse ask(std::vector<ChatMessage> messages, const std::string& user_id, const SurveyQuestion& question,
                    Scenario scenario) const;

  Gateway& gateway_;
  ProbeConfig cfg_;
};

/// Mean of max(distribution) over the responses of one scenario.
double mean_confidence(std::span<const ProbeResponse> responses, Scenario scenario);

std::string dump_responses(const std::vector<ProbeResponse>& responses, const std::optional<json>& meta);

}  // namespace adaptprobe
