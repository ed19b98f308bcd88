#include "adaptprobe/value_probe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

constexpr std::uint64_t kStageProbe = 3;
constexpr std::string_view kFieldName = "selected_option_id";

std::string strip_token(std::string_view tok) {
  auto t = trim(tok);
  std::size_t b = 0, e = t.size();
  while (b < e && (t[b] == '"' || t[b] == '\'')) ++b;
  while (e > b && (t[e - 1] == '"' || t[e - 1] == '\'')) --e;
  return trim(std::string_view(t).substr(b, e - b));
}

int option_of(std::string_view tok) {
  auto s = strip_token(tok);
  if (s.size() == 1 && s[0] >= '1' && s[0] <= '5') return s[0] - '0';
  return 0;
}

bool retryable(ErrorCode c) {
  return c == ErrorCode::Transport || c == ErrorCode::RateLimited || c == ErrorCode::MalformedUpstreamPayload ||
         c == ErrorCode::SchemaValidationExhausted || c == ErrorCode::OptionTokenNotLocated;
}

}  // namespace

ScenarioSelection parse_scenario_selection(std::string_view text) {
  if (text == "profile") return ScenarioSelection::Profile;
  if (text == "dialogue") return ScenarioSelection::Dialogue;
  if (text == "both") return ScenarioSelection::Both;
  fail(ErrorCode::Config, "scenario must be profile, dialogue or both");
}

std::string_view to_string(ScenarioSelection s) {
  switch (s) {
    case ScenarioSelection::Profile: return "profile";
    case ScenarioSelection::Dialogue: return "dialogue";
    case ScenarioSelection::Both: return "both";
  }
  return "both";
}

void ProbeConfig::validate() const {
  target.validate();
  templates.require("profile_user", {"PROFILE", "QUESTION", "OPTIONS", "FORMAT"});
  templates.require("dialogue_question", {"QUESTION", "OPTIONS", "FORMAT"});
  templates.get("profile_system");
  templates.get("dialogue_system");
  templates.get("format");
  if (item_retries < 0) fail(ErrorCode::Config, "item_retries must be >= 0");
}

OutputSchema probe_schema() {
  FieldSpec id{"selected_option_id", FieldType::Integer};
  id.min = 1;
  id.max = kOptionCount;
  return {"survey_answer", {id, {"justification", FieldType::String}}};
}

std::vector<ChatMessage> render_profile_prompt(const TemplateSet& t, const UserProfile& profile,
                                               const SurveyQuestion& question) {
  t.require("profile_user", {"PROFILE", "QUESTION", "OPTIONS", "FORMAT"});
  return {{"system", t.get("profile_system")},
          {"user", render_template(t.get("profile_user"), {{"PROFILE", render_profile_block(profile)},
                                                            {"QUESTION", question.text},
                                                            {"OPTIONS", render_options_block(question)},
                                                            {"FORMAT", t.get("format")}})}};
}

std::vector<ChatMessage> render_dialogue_prompt(const TemplateSet& t, const Dialogue& dialogue,
                                                const SurveyQuestion& question) {
  if (dialogue.turns.empty()) fail(ErrorCode::EmptyDialogue, "dialogue for " + dialogue.user_id + " has no turns");
  t.require("dialogue_question", {"QUESTION", "OPTIONS", "FORMAT"});
  std::vector<ChatMessage> out;
  out.push_back({"system", t.get("dialogue_system")});
  for (const auto& turn : dialogue.turns) out.push_back({std::string(to_string(turn.role)), turn.content});
  out.push_back({"user", render_template(t.get("dialogue_question"), {{"QUESTION", question.text},
                                                                       {"OPTIONS", render_options_block(question)},
                                                                       {"FORMAT", t.get("format")}})});
  return out;
}

Extraction extract_option_distribution(const ChatResponse& response, const json& parsed) {
  if (!parsed.contains(kFieldName) || !parsed.at(kFieldName).is_number_integer())
    fail(ErrorCode::PreconditionViolation, "parsed answer has no integer selected_option_id");
  const int selected = parsed.at(kFieldName).get<int>();
  if (selected < 1 || selected > kOptionCount) fail(ErrorCode::ValueOutOfRange, "selected_option_id out of 1..5");
  const auto& tokens = response.token_logprobs;

  std::string text;
  std::vector<std::size_t> starts;
  for (const auto& t : tokens) {
    starts.push_back(text.size());
    text += t.token;
  }
  const auto field_pos = text.find(kFieldName);
  if (field_pos == std::string::npos)
    fail(ErrorCode::OptionTokenNotLocated, "field name not present in the token stream");
  const auto field_end = field_pos + kFieldName.size();

  std::size_t position = tokens.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (starts[i] < field_end) continue;
    if (option_of(tokens[i].token) == selected && strip_token(tokens[i].token).size() == 1) {
      position = i;
      break;
    }
  }
  if (position == tokens.size())
    fail(ErrorCode::OptionTokenNotLocated, "no token carries option " + std::to_string(selected));

  Extraction out;
  out.raw.source_position = static_cast<int>(position);
  std::array<double, kOptionCount> mass{};
  bool any = false;
  for (const auto& alt : tokens[position].alternatives) {
    out.alternatives.push_back({alt.token, alt.logprob});
    const int id = option_of(alt.token);
    if (id == 0) continue;
    // distinct tokens spelling the same option (e.g. "2" and " 2") pool their mass
    mass[id - 1] += std::exp(alt.logprob);
    any = true;
  }
  for (int k = 0; k < kOptionCount; ++k)
    if (mass[k] > 0) out.raw.logprobs[k] = std::log(mass[k]);

  double total = 0;
  for (double v : mass) total += v;
  if (!any || !(total > 0))
    out.distribution = OptionDistribution::one_hot(selected, /*degenerate=*/true);
  else
    out.distribution = OptionDistribution::from_masses(mass);
  return out;
}

ValueProbe::ValueProbe(Gateway& gateway, ProbeConfig cfg) : gateway_(gateway), cfg_(std::move(cfg)) {
  cfg_.validate();
}

ProbeResponse ValueProbe::ask(std::vector<ChatMessage> messages, const std::string& user_id,
                              const SurveyQuestion& question, Scenario scenario) const {
  ChatRequest req;
  req.messages = std::move(messages);
  req.temperature = 0.0;
  req.want_logprobs = true;
  req.top_logprobs = 5;
  req.output_schema = probe_schema();
  req.seed = derive_seed(cfg_.seed, kStageProbe,
                         fnv1a64(user_id + "|" + std::string(to_string(scenario)) + "|" + std::to_string(question.id)));

  ProbeResponse r;
  r.user_id = user_id;
  r.question_id = question.id;
  r.scenario = scenario;

  json value;
  ChatResponse response;
  if (cfg_.reasoning_mode) {
    auto two = gateway_.two_pass_reason(cfg_.target, req);
    value = std::move(two.value);
    response = std::move(two.response);
    r.meta.upstream_calls = two.upstream_calls;
    r.meta.empty_reasoning = two.empty_reasoning;
    r.meta.reasoning_text = two.reasoning_text;
  } else {
    auto one = gateway_.complete_structured(cfg_.target, req);
    value = std::move(one.value);
    response = std::move(one.response);
    r.meta.upstream_calls = one.attempts;
  }

  auto extraction = extract_option_distribution(response, value);
  r.meta.model_selected_option_id = value.at("selected_option_id").get<int>();
  r.meta.source_position = extraction.raw.source_position;
  r.justification = value.at("justification").get<std::string>();
  r.distribution = extraction.distribution;
  r.raw_logprobs = std::move(extraction.alternatives);
  // the stored id always agrees with the distribution; the model's own pick stays in meta
  r.selected_option_id = r.distribution.argmax_id();
  validate(r);
  return r;
}

ProbeResponse ValueProbe::probe_one(const SurveyQuestion& question, const UserProfile& profile) const {
  return ask(render_profile_prompt(cfg_.templates, profile, question), profile.user_id, question, Scenario::Profile);
}

ProbeResponse ValueProbe::probe_one(const SurveyQuestion& question, const Dialogue& dialogue) const {
  return ask(render_dialogue_prompt(cfg_.templates, dialogue, question), dialogue.user_id, question,
             Scenario::Dialogue);
}

std::vector<ProbeResponse> ValueProbe::probe_run(const Survey& survey, const std::vector<UserProfile>& profiles,
                                                 const std::vector<Dialogue>& dialogues,
                                                 ScenarioSelection scenarios) const {
  std::map<std::string, const UserProfile*> by_id;
  for (const auto& p : profiles) by_id[p.user_id] = &p;
  for (const auto& d : dialogues)
    if (!by_id.count(d.user_id)) fail(ErrorCode::PreconditionViolation, "dialogue " + d.user_id + " has no profile");

  struct Item {
    std::string user_id;
    Scenario scenario;
    int question_id;
    const UserProfile* profile = nullptr;
    const Dialogue* dialogue = nullptr;
  };
  std::vector<Item> items;
  if (scenarios != ScenarioSelection::Dialogue)
    for (const auto& p : profiles)
      for (const auto& q : survey.questions()) items.push_back({p.user_id, Scenario::Profile, q.id, &p, nullptr});
  if (scenarios != ScenarioSelection::Profile)
    for (const auto& d : dialogues)
      for (const auto& q : survey.questions()) items.push_back({d.user_id, Scenario::Dialogue, q.id, nullptr, &d});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return std::tie(a.user_id, a.scenario, a.question_id) < std::tie(b.user_id, b.scenario, b.question_id);
  });

  std::vector<std::optional<ProbeResponse>> results(items.size());
  std::vector<std::string> failures(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const auto& item = items[i];
      const auto& question = survey.question(item.question_id);
      for (int attempt = 0; attempt <= cfg_.item_retries; ++attempt) {
        try {
          results[i] = item.profile ? probe_one(question, *item.profile) : probe_one(question, *item.dialogue);
          break;
        } catch (const Error& e) {
          failures[i] = e.what();
          if (!retryable(e.code())) break;
        }
      }
    }
  };
  const int wanted = cfg_.workers > 0 ? cfg_.workers : cfg_.target.max_concurrency;
  const auto count =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(wanted), items.size()));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::vector<ProbeResponse> out;
  std::string unanswered;
  std::size_t missing = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (results[i]) {
      out.push_back(std::move(*results[i]));
      continue;
    }
    ++missing;
    unanswered += "\n  " + items[i].user_id + "/" + std::string(to_string(items[i].scenario)) + "/q" +
                  std::to_string(items[i].question_id) + ": " + failures[i];
  }
  if (missing > 0) fail(ErrorCode::UnansweredItems, std::to_string(missing) + " item(s) unanswered:" + unanswered);
  return out;
}

double mean_confidence(std::span<const ProbeResponse> responses, Scenario scenario) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : responses) {
    if (r.scenario != scenario) continue;
    sum += r.distribution.max();
    ++n;
  }
  if (n == 0) fail(ErrorCode::EmptyInput, "no responses for scenario " + std::string(to_string(scenario)));
  return sum / static_cast<double>(n);
}

std::string dump_responses(const std::vector<ProbeResponse>& responses, const std::optional<json>& meta) {
  std::vector<json> records;
  records.reserve(responses.size());
  for (const auto& r : responses) records.push_back(to_json(r));
  return dump_jsonl(records, meta);
}

}  // namespace adaptprobe
