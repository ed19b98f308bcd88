#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptprobe/llm_gateway.hpp"
#include "adaptprobe/survey_model.hpp"
#include "adaptprobe/templates.hpp"

namespace adaptprobe {

enum class OocMode { Revise, Discard };
std::string_view to_string(OocMode mode);
OocMode parse_ooc_mode(std::string_view text);

struct FactoryConfig {
  EndpointConfig simulator;
  EndpointConfig detector;
  EndpointConfig qa;
  /// Stop once the history holds this many messages (user and assistant both count).
  int max_runs = 5;
  OocMode ooc_mode = OocMode::Revise;
  TemplateSet templates = TemplateSet::factory_defaults();
  std::uint64_t seed = 0;
  std::string timestamp = "1970-01-01T00:00:00Z";
  int workers = 0;  // 0 = simulator.max_concurrency

  void validate() const;
};

struct SimulatorOutput {
  std::string question;
  bool end_conversation = false;
};

struct OocVerdict {
  bool in_context = true;
  std::optional<std::string> revised_question;
  std::vector<std::string> reasons;
};

enum class TurnKind { Initial, Subsequent };

enum class SkipReason { OocDiscard, OocUnrevisable, NoInitialQuestion, UpstreamFailure };
std::string_view to_string(SkipReason reason);

struct Skipped {
  std::string user_id;
  SkipReason reason = SkipReason::UpstreamFailure;
  std::string detail;
};

struct DialogueOutcome {
  std::optional<Dialogue> dialogue;
  std::optional<Skipped> skipped;
};

struct CorpusResult {
  std::vector<Dialogue> dialogues;  // input profile order
  std::vector<Skipped> skips;       // input profile order
};

/// Three-role dialogue synthesis: a user simulator asks, an out-of-context
/// detector gates each question, and a QA model answers with the full history.
class DialogueFactory {
 public:
  DialogueFactory(Gateway& gateway, FactoryConfig cfg);

  SimulatorOutput simulate_user_turn(const UserProfile& profile, const std::vector<DialogueTurn>& history,
                                     TurnKind kind, std::optional<std::uint64_t> seed = std::nullopt) const;
  OocVerdict check_out_of_context(const UserProfile& profile, const std::string& question,
                                  std::optional<std::uint64_t> seed = std::nullopt) const;
  std::string answer_question(const std::vector<DialogueTurn>& history, const std::string& question,
                              std::optional<std::uint64_t> seed = std::nullopt) const;

  /// One dialogue for one profile; `index` selects the per-profile seed.
  DialogueOutcome generate_dialogue(const UserProfile& profile, std::size_t index = 0) const;
  CorpusResult generate_corpus(const std::vector<UserProfile>& profiles) const;

  const FactoryConfig& config() const noexcept { return cfg_; }

 private:
  Gateway& gateway_;
  FactoryConfig cfg_;
};

OutputSchema simulator_schema();
OutputSchema ooc_schema();

std::string dump_dialogues(const std::vector<Dialogue>& dialogues, const std::optional<json>& meta);
std::string dump_skip_report(const std::vector<Skipped>& skips, const std::optional<json>& meta);

}  // namespace adaptprobe
