#include "adaptprobe/dialogue_factory.hpp"

#include <atomic>
#include <thread>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

constexpr std::uint64_t kStageDialogue = 1;

bool is_upstream(ErrorCode c) {
  return c == ErrorCode::Transport || c == ErrorCode::RateLimited || c == ErrorCode::MalformedUpstreamPayload ||
         c == ErrorCode::SchemaValidationExhausted || c == ErrorCode::UnparseableSimulatorOutput ||
         c == ErrorCode::UnparseableVerdict;
}

std::vector<ChatMessage> replay(const std::vector<DialogueTurn>& turns) {
  std::vector<ChatMessage> out;
  out.reserve(turns.size());
  for (const auto& t : turns) out.push_back({std::string(to_string(t.role)), t.content});
  return out;
}

}  // namespace

std::string_view to_string(OocMode mode) { return mode == OocMode::Revise ? "revise" : "discard"; }

OocMode parse_ooc_mode(std::string_view text) {
  if (text == "revise") return OocMode::Revise;
  if (text == "discard") return OocMode::Discard;
  fail(ErrorCode::Config, "ooc_mode must be revise or discard, got '" + std::string(text) + "'");
}

std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::OocDiscard: return "OocDiscard";
    case SkipReason::OocUnrevisable: return "OocUnrevisable";
    case SkipReason::NoInitialQuestion: return "NoInitialQuestion";
    case SkipReason::UpstreamFailure: return "UpstreamFailure";
  }
  return "UpstreamFailure";
}

void FactoryConfig::validate() const {
  simulator.validate();
  detector.validate();
  qa.validate();
  if (max_runs < 2) fail(ErrorCode::Config, "max_runs must be >= 2");
  templates.require("simulator_initial", {"PROFILE", "OBJECTIVES", "TERMINATION"});
  templates.require("simulator_subsequent", {"PROFILE", "HISTORY_BLOCK", "OBJECTIVES", "TERMINATION"});
  templates.require("ooc_user", {"PROFILE", "QUESTION"});
  templates.get("simulator_system");
  templates.get("ooc_system");
}

OutputSchema simulator_schema() {
  return {"simulated_user_turn",
          {{"question", FieldType::String}, {"end_conversation", FieldType::Boolean}}};
}

OutputSchema ooc_schema() {
  return {"out_of_context_verdict",
          {{"in_context", FieldType::Boolean},
           {"revised_question", FieldType::NullableString, /*required=*/false},
           {"reasons", FieldType::StringArray, /*required=*/false}}};
}

DialogueFactory::DialogueFactory(Gateway& gateway, FactoryConfig cfg) : gateway_(gateway), cfg_(std::move(cfg)) {
  cfg_.validate();
}

SimulatorOutput DialogueFactory::simulate_user_turn(const UserProfile& profile,
                                                    const std::vector<DialogueTurn>& history, TurnKind kind,
                                                    std::optional<std::uint64_t> seed) const {
  if ((kind == TurnKind::Initial) != history.empty())
    fail(ErrorCode::PreconditionViolation, "initial turns need an empty history and subsequent turns a non-empty one");
  const auto& t = cfg_.templates;
  std::map<std::string, std::string> values = {{"PROFILE", render_profile_block(profile)},
                                                {"OBJECTIVES", t.get("objectives")},
                                                {"TERMINATION", t.get("termination")}};
  // The transcript goes into one user message so the simulator does not
  // confuse its own role with the assistant's.
  if (kind == TurnKind::Subsequent) values["HISTORY_BLOCK"] = render_history_block(history);

  ChatRequest req;
  req.messages = {{"system", t.get("simulator_system")},
                  {"user", render_template(t.get(kind == TurnKind::Initial ? "simulator_initial" : "simulator_subsequent"),
                                           values)}};
  req.output_schema = simulator_schema();
  req.seed = seed;

  StructuredResult result;
  try {
    result = gateway_.complete_structured(cfg_.simulator, req);
  } catch (const StructuredOutputError& e) {
    fail(ErrorCode::UnparseableSimulatorOutput, e.last_raw_text());
  }
  SimulatorOutput out{trim(result.value.at("question").get<std::string>()),
                      result.value.at("end_conversation").get<bool>()};
  if (out.end_conversation) out.question.clear();
  if (!out.end_conversation && out.question.empty())
    fail(ErrorCode::UnparseableSimulatorOutput, "empty question without the end flag");
  return out;
}

OocVerdict DialogueFactory::check_out_of_context(const UserProfile& profile, const std::string& question,
                                                 std::optional<std::uint64_t> seed) const {
  if (trim(question).empty()) fail(ErrorCode::PreconditionViolation, "question is empty");
  const auto& t = cfg_.templates;
  ChatRequest req;
  req.messages = {{"system", t.get("ooc_system")},
                  {"user", render_template(t.get("ooc_user"),
                                           {{"PROFILE", render_profile_block(profile)}, {"QUESTION", question}})}};
  req.output_schema = ooc_schema();
  req.seed = seed;

  StructuredResult result;
  try {
    result = gateway_.complete_structured(cfg_.detector, req);
  } catch (const StructuredOutputError& e) {
    fail(ErrorCode::UnparseableVerdict, e.last_raw_text());
  }
  OocVerdict v;
  v.in_context = result.value.at("in_context").get<bool>();
  if (result.value.contains("reasons"))
    for (const auto& r : result.value.at("reasons")) v.reasons.push_back(r.get<std::string>());
  if (!v.in_context && cfg_.ooc_mode == OocMode::Revise) {
    const auto& rq = result.value.value("revised_question", json());
    if (!rq.is_string() || trim(rq.get<std::string>()).empty())
      fail(ErrorCode::UnparseableVerdict, "out-of-context verdict without a revised question");
    v.revised_question = trim(rq.get<std::string>());
  }
  return v;
}

std::string DialogueFactory::answer_question(const std::vector<DialogueTurn>& history, const std::string& question,
                                             std::optional<std::uint64_t> seed) const {
  if (trim(question).empty()) fail(ErrorCode::PreconditionViolation, "question is empty");
  ChatRequest req;
  req.messages = replay(history);
  req.messages.push_back({"user", question});
  req.seed = seed;
  return gateway_.chat_complete(cfg_.qa, req).text;
}

DialogueOutcome DialogueFactory::generate_dialogue(const UserProfile& profile, std::size_t index) const {
  const std::uint64_t profile_seed = derive_seed(cfg_.seed, kStageDialogue, index);
  std::uint64_t call = 0;
  auto next_seed = [&] { return derive_seed(profile_seed, 0, call++); };
  auto skip = [&](SkipReason reason, std::string detail) {
    return DialogueOutcome{std::nullopt, Skipped{profile.user_id, reason, std::move(detail)}};
  };

  std::vector<DialogueTurn> history;
  // Returns the question to use, or nullopt when the profile must be skipped.
  auto gate = [&](const std::string& question, std::optional<Skipped>& skipped) -> std::optional<std::string> {
    auto verdict = check_out_of_context(profile, question, next_seed());
    if (verdict.in_context) return question;
    if (cfg_.ooc_mode == OocMode::Discard) {
      skipped = Skipped{profile.user_id, SkipReason::OocDiscard, question};
      return std::nullopt;
    }
    if (*verdict.revised_question == trim(question)) {
      skipped = Skipped{profile.user_id, SkipReason::OocUnrevisable, question};
      return std::nullopt;
    }
    return verdict.revised_question;
  };
  auto exchange = [&](const std::string& question) {
    auto reply = answer_question(history, question, next_seed());
    if (reply.empty()) fail(ErrorCode::MalformedUpstreamPayload, "empty assistant reply");
    history.push_back({Role::User, question});
    history.push_back({Role::Assistant, std::move(reply)});
  };

  try {
    auto first = simulate_user_turn(profile, history, TurnKind::Initial, next_seed());
    if (first.end_conversation) return skip(SkipReason::NoInitialQuestion, "simulator ended before asking");
    std::optional<Skipped> skipped;
    auto question = gate(first.question, skipped);
    if (!question) return {std::nullopt, skipped};
    exchange(*question);

    while (true) {
      auto next = simulate_user_turn(profile, history, TurnKind::Subsequent, next_seed());
      if (next.end_conversation || static_cast<int>(history.size()) >= cfg_.max_runs) break;
      question = gate(next.question, skipped);
      if (!question) return {std::nullopt, skipped};
      exchange(*question);
    }
  } catch (const Error& e) {
    if (!is_upstream(e.code())) throw;
    return skip(SkipReason::UpstreamFailure, e.what());
  }

  Dialogue d;
  d.user_id = profile.user_id;
  d.turns = std::move(history);
  d.generation_meta.models = {{"simulator", cfg_.simulator.model_name},
                              {"detector", cfg_.detector.model_name},
                              {"qa", cfg_.qa.model_name}};
  d.generation_meta.seed = profile_seed;
  d.generation_meta.timestamp = cfg_.timestamp;
  validate(d);
  return {std::move(d), std::nullopt};
}

CorpusResult DialogueFactory::generate_corpus(const std::vector<UserProfile>& profiles) const {
  std::vector<DialogueOutcome> outcomes(profiles.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < profiles.size(); i = next++) {
      try {
        outcomes[i] = generate_dialogue(profiles[i], i);
      } catch (const Error& e) {
        outcomes[i] = {std::nullopt, Skipped{profiles[i].user_id, SkipReason::UpstreamFailure, e.what()}};
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int wanted = cfg_.workers > 0 ? cfg_.workers : cfg_.simulator.max_concurrency;
  const auto count = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(wanted), profiles.size()));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  CorpusResult out;
  for (auto& o : outcomes) {
    if (o.dialogue) out.dialogues.push_back(std::move(*o.dialogue));
    if (o.skipped) out.skips.push_back(std::move(*o.skipped));
  }
  return out;
}

std::string dump_dialogues(const std::vector<Dialogue>& dialogues, const std::optional<json>& meta) {
  std::vector<json> records;
  records.reserve(dialogues.size());
  for (const auto& d : dialogues) records.push_back(to_json(d));
  return dump_jsonl(records, meta);
}

std::string dump_skip_report(const std::vector<Skipped>& skips, const std::optional<json>& meta) {
  std::vector<json> records;
  for (const auto& s : skips)
    records.push_back({{"user_id", s.user_id}, {"reason", to_string(s.reason)}, {"detail", s.detail}});
  return dump_jsonl(records, meta);
}

}  // namespace adaptprobe
