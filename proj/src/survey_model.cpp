#include "adaptprobe/survey_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

constexpr double kSumTolerance = 1e-9;

template <typename T>
T field(const json& rec, const char* name, std::string_view what) {
  if (!rec.is_object() || !rec.contains(name))
    fail(ErrorCode::SchemaViolation, std::string(what) + ": missing field '" + name + "'");
  try {
    return rec.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::SchemaViolation, std::string(what) + ": field '" + name + "' has the wrong type");
  }
}

std::array<double, kOptionCount> to_array(const json& arr, std::string_view what) {
  if (!arr.is_array() || arr.size() != kOptionCount)
    fail(ErrorCode::SchemaViolation, std::string(what) + ": distribution must have 5 entries");
  std::array<double, kOptionCount> out{};
  for (int k = 0; k < kOptionCount; ++k) {
    if (!arr[k].is_number()) fail(ErrorCode::SchemaViolation, std::string(what) + ": non-numeric probability");
    out[k] = arr[k].get<double>();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Survey

Survey::Survey(std::vector<SurveyQuestion> questions) : questions_(std::move(questions)) {
  if (questions_.empty()) fail(ErrorCode::SchemaViolation, "survey has no questions");
  std::sort(questions_.begin(), questions_.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const auto& q = questions_[i];
    validate(q);
    if (i > 0 && questions_[i - 1].id == q.id)
      fail(ErrorCode::SchemaViolation, "duplicate question id " + std::to_string(q.id));
    if (q.id != static_cast<int>(i) + 1)
      fail(ErrorCode::SchemaViolation, "question ids must be contiguous from 1; found " + std::to_string(q.id));
  }
}

const SurveyQuestion& Survey::question(int id) const {
  if (id < 1 || id > static_cast<int>(questions_.size()))
    fail(ErrorCode::ValueOutOfRange, "no question with id " + std::to_string(id));
  return questions_[static_cast<std::size_t>(id - 1)];
}

void validate(const SurveyQuestion& q) {
  if (trim(q.text).empty())
    fail(ErrorCode::SchemaViolation, "question " + std::to_string(q.id) + " has empty text");
  for (int k = 0; k < kOptionCount; ++k) {
    if (q.options[k].id != k + 1)
      fail(ErrorCode::SchemaViolation, "question " + std::to_string(q.id) + " option ids must be exactly 1..5");
  }
}

json to_json(const Survey& s) {
  json qs = json::array();
  for (const auto& q : s.questions()) {
    json opts = json::array();
    for (const auto& o : q.options) opts.push_back({{"id", o.id}, {"label", o.label}});
    qs.push_back({{"id", q.id}, {"text", q.text}, {"options", opts}});
  }
  return {{"questions", qs}};
}

Survey survey_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("questions") || !doc.at("questions").is_array())
    fail(ErrorCode::SchemaViolation, "survey document needs a 'questions' array");
  std::vector<SurveyQuestion> questions;
  for (const auto& jq : doc.at("questions")) {
    SurveyQuestion q;
    q.id = field<int>(jq, "id", "question");
    const std::string where = "question " + std::to_string(q.id);
    q.text = field<std::string>(jq, "text", where);
    auto opts = field<json>(jq, "options", where);
    if (!opts.is_array() || opts.size() != kOptionCount)
      fail(ErrorCode::SchemaViolation, where + " must have exactly 5 options, has " +
                                           std::to_string(opts.is_array() ? opts.size() : 0));
    std::set<int> seen;
    for (const auto& jo : opts) {
      int id = field<int>(jo, "id", where);
      if (id < 1 || id > kOptionCount || !seen.insert(id).second)
        fail(ErrorCode::SchemaViolation, where + " option ids must be exactly 1..5");
      q.options[static_cast<std::size_t>(id - 1)] = {id, field<std::string>(jo, "label", where)};
    }
    questions.push_back(std::move(q));
  }
  return Survey(std::move(questions));
}

Survey load_survey(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
  return survey_from_json(doc);
}

// ---------------------------------------------------------------- Profiles

std::string_view to_string(EducationLevel level) {
  switch (level) {
    case EducationLevel::HighSchool: return "HighSchool";
    case EducationLevel::Bachelor: return "Bachelor";
    case EducationLevel::Master: return "Master";
    case EducationLevel::PhD: return "PhD";
  }
  return "HighSchool";
}

EducationLevel parse_education_level(std::string_view text) {
  for (auto level : {EducationLevel::HighSchool, EducationLevel::Bachelor, EducationLevel::Master,
                     EducationLevel::PhD}) {
    if (text == to_string(level)) return level;
  }
  fail(ErrorCode::UnknownEducationLevel, "'" + std::string(text) + "'");
}

void validate(const UserProfile& p) {
  if (p.user_id.empty()) fail(ErrorCode::SchemaViolation, "profile with empty user_id");
  if (p.age < 14 || p.age > 100)
    fail(ErrorCode::FieldOutOfRange, "user " + p.user_id + ": age " + std::to_string(p.age) + " outside [14, 100]");
  if (p.gender.empty() || p.job_title.empty() || p.nationality.empty())
    fail(ErrorCode::SchemaViolation, "user " + p.user_id + ": empty profile field");
}

json to_json(const UserProfile& p) {
  return {{"user_id", p.user_id},     {"age", p.age},
          {"gender", p.gender},       {"job_title", p.job_title},
          {"education_level", to_string(p.education_level)},
          {"nationality", p.nationality}};
}

UserProfile profile_from_json(const json& rec) {
  UserProfile p;
  p.user_id = field<std::string>(rec, "user_id", "profile");
  const std::string where = "profile " + p.user_id;
  p.age = field<int>(rec, "age", where);
  p.gender = field<std::string>(rec, "gender", where);
  p.job_title = field<std::string>(rec, "job_title", where);
  p.education_level = parse_education_level(field<std::string>(rec, "education_level", where));
  p.nationality = field<std::string>(rec, "nationality", where);
  validate(p);
  return p;
}

std::vector<UserProfile> parse_profiles(const JsonLines& lines) {
  std::vector<UserProfile> out;
  std::set<std::string> ids;
  for (const auto& rec : lines.records) {
    auto p = profile_from_json(rec);
    if (!ids.insert(p.user_id).second) fail(ErrorCode::DuplicateUserId, p.user_id);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<UserProfile> load_profiles(const std::filesystem::path& path) {
  return parse_profiles(read_jsonl(path));
}

// ---------------------------------------------------------------- Dialogues

std::string_view to_string(Role role) { return role == Role::User ? "user" : "assistant"; }

void validate(const Dialogue& d) {
  if (d.user_id.empty()) fail(ErrorCode::SchemaViolation, "dialogue with empty user_id");
  if (d.turns.size() < 2 || d.turns.size() % 2 != 0)
    fail(ErrorCode::SchemaViolation, "dialogue " + d.user_id + ": turn count must be even and >= 2");
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    Role expected = i % 2 == 0 ? Role::User : Role::Assistant;
    if (d.turns[i].role != expected)
      fail(ErrorCode::SchemaViolation, "dialogue " + d.user_id + ": roles must alternate starting with user");
    if (d.turns[i].content.empty())
      fail(ErrorCode::SchemaViolation, "dialogue " + d.user_id + ": empty turn content");
  }
}

json to_json(const Dialogue& d) {
  json turns = json::array();
  for (const auto& t : d.turns) turns.push_back({{"role", to_string(t.role)}, {"content", t.content}});
  json models = json::object();
  for (const auto& [k, v] : d.generation_meta.models) models[k] = v;
  return {{"user_id", d.user_id},
          {"turns", turns},
          {"generation_meta",
           {{"models", models}, {"seed", d.generation_meta.seed}, {"timestamp", d.generation_meta.timestamp}}}};
}

Dialogue dialogue_from_json(const json& rec) {
  Dialogue d;
  d.user_id = field<std::string>(rec, "user_id", "dialogue");
  const std::string where = "dialogue " + d.user_id;
  auto turns = field<json>(rec, "turns", where);
  if (!turns.is_array()) fail(ErrorCode::SchemaViolation, where + ": turns must be an array");
  for (const auto& jt : turns) {
    auto role = field<std::string>(jt, "role", where);
    if (role != "user" && role != "assistant") fail(ErrorCode::SchemaViolation, where + ": bad role " + role);
    d.turns.push_back({role == "user" ? Role::User : Role::Assistant, field<std::string>(jt, "content", where)});
  }
  if (rec.contains("generation_meta")) {
    const auto& gm = rec.at("generation_meta");
    if (gm.contains("models"))
      for (auto& [k, v] : gm.at("models").items()) d.generation_meta.models[k] = v.get<std::string>();
    if (gm.contains("seed")) d.generation_meta.seed = gm.at("seed").get<std::uint64_t>();
    if (gm.contains("timestamp")) d.generation_meta.timestamp = gm.at("timestamp").get<std::string>();
  }
  validate(d);
  return d;
}

std::vector<Dialogue> parse_dialogues(const JsonLines& lines) {
  std::vector<Dialogue> out;
  std::set<std::string> ids;
  for (const auto& rec : lines.records) {
    auto d = dialogue_from_json(rec);
    if (!ids.insert(d.user_id).second) fail(ErrorCode::DuplicateUserId, "second dialogue for " + d.user_id);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Dialogue> load_dialogues(const std::filesystem::path& path) {
  return parse_dialogues(read_jsonl(path));
}

// ---------------------------------------------------------------- Distributions

OptionDistribution OptionDistribution::from_masses(const std::array<double, kOptionCount>& masses) {
  double sum = 0.0;
  for (double v : masses) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorCode::InvalidDistribution, "negative or non-finite mass");
    sum += v;
  }
  if (!(sum > 0.0)) fail(ErrorCode::InvalidDistribution, "all option masses are zero");
  OptionDistribution d;
  for (int k = 0; k < kOptionCount; ++k) d.probs_[k] = masses[k] / sum;
  return d;
}

OptionDistribution OptionDistribution::from_normalized(const std::array<double, kOptionCount>& probs,
                                                       bool degenerate) {
  double sum = 0.0;
  for (double v : probs) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorCode::InvalidDistribution, "negative or non-finite probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    fail(ErrorCode::InvalidDistribution, "probabilities sum to " + std::to_string(sum));
  OptionDistribution d;
  d.probs_ = probs;
  d.degenerate_ = degenerate;
  return d;
}

OptionDistribution OptionDistribution::one_hot(int option_id, bool degenerate) {
  if (option_id < 1 || option_id > kOptionCount)
    fail(ErrorCode::ValueOutOfRange, "option id " + std::to_string(option_id));
  OptionDistribution d;
  d.probs_[static_cast<std::size_t>(option_id - 1)] = 1.0;
  d.degenerate_ = degenerate;
  return d;
}

double OptionDistribution::max() const { return *std::max_element(probs_.begin(), probs_.end()); }

int OptionDistribution::argmax_id() const {
  // max_element returns the first maximum, which is the lowest id
  return static_cast<int>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin()) + 1;
}

// ---------------------------------------------------------------- Responses

std::string_view to_string(Scenario s) { return s == Scenario::Profile ? "profile" : "dialogue"; }

Scenario parse_scenario(std::string_view text) {
  if (text == "profile") return Scenario::Profile;
  if (text == "dialogue") return Scenario::Dialogue;
  fail(ErrorCode::SchemaViolation, "unknown scenario '" + std::string(text) + "'");
}

void validate(const ProbeResponse& r) {
  if (r.user_id.empty()) fail(ErrorCode::SchemaViolation, "response with empty user_id");
  if (r.selected_option_id < 1 || r.selected_option_id > kOptionCount)
    fail(ErrorCode::ValueOutOfRange, "selected_option_id " + std::to_string(r.selected_option_id));
  if (r.selected_option_id != r.distribution.argmax_id())
    fail(ErrorCode::SchemaViolation, "response " + r.user_id + "/q" + std::to_string(r.question_id) +
                                         ": selected_option_id is not the distribution argmax");
}

json to_json(const ProbeResponse& r) {
  json raw = json::array();
  for (const auto& t : r.raw_logprobs) raw.push_back({t.token, t.logprob});
  json meta = {{"model_selected_option_id", r.meta.model_selected_option_id},
               {"upstream_calls", r.meta.upstream_calls},
               {"source_position", r.meta.source_position},
               {"empty_reasoning", r.meta.empty_reasoning}};
  if (!r.meta.reasoning_text.empty()) meta["reasoning_text"] = r.meta.reasoning_text;
  return {{"user_id", r.user_id},
          {"question_id", r.question_id},
          {"scenario", to_string(r.scenario)},
          {"selected_option_id", r.selected_option_id},
          {"justification", r.justification},
          {"distribution", r.distribution.probs()},
          {"degenerate", r.distribution.degenerate()},
          {"raw_logprobs", raw},
          {"meta", meta}};
}

ProbeResponse response_from_json(const json& rec) {
  ProbeResponse r;
  r.user_id = field<std::string>(rec, "user_id", "response");
  r.question_id = field<int>(rec, "question_id", "response " + r.user_id);
  const std::string where = "response " + r.user_id + "/q" + std::to_string(r.question_id);
  r.scenario = parse_scenario(field<std::string>(rec, "scenario", where));
  r.selected_option_id = field<int>(rec, "selected_option_id", where);
  r.justification = rec.value("justification", std::string{});
  bool degenerate = rec.value("degenerate", false);
  r.distribution = OptionDistribution::from_normalized(to_array(field<json>(rec, "distribution", where), where),
                                                       degenerate);
  if (rec.contains("raw_logprobs")) {
    for (const auto& e : rec.at("raw_logprobs")) {
      if (!e.is_array() || e.size() != 2) fail(ErrorCode::SchemaViolation, where + ": raw_logprobs entry");
      r.raw_logprobs.push_back({e[0].get<std::string>(), e[1].get<double>()});
    }
  }
  if (rec.contains("meta")) {
    const auto& m = rec.at("meta");
    r.meta.model_selected_option_id = m.value("model_selected_option_id", r.selected_option_id);
    r.meta.upstream_calls = m.value("upstream_calls", 1);
    r.meta.source_position = m.value("source_position", -1);
    r.meta.empty_reasoning = m.value("empty_reasoning", false);
    r.meta.reasoning_text = m.value("reasoning_text", std::string{});
  }
  validate(r);
  return r;
}

std::vector<ProbeResponse> parse_responses(const JsonLines& lines) {
  std::vector<ProbeResponse> out;
  out.reserve(lines.records.size());
  for (const auto& rec : lines.records) out.push_back(response_from_json(rec));
  return out;
}

std::vector<ProbeResponse> load_responses(const std::filesystem::path& path) {
  return parse_responses(read_jsonl(path));
}

// ---------------------------------------------------------------- Sequences

SelectionSequence assemble_sequence(std::span<const ProbeResponse> responses, const Survey& survey) {
  const auto m = survey.m();
  if (responses.empty()) fail(ErrorCode::MissingQuestion, "1");
  SelectionSequence seq{responses.front().user_id, responses.front().scenario, std::vector<int>(m, 0)};
  for (const auto& r : responses) {
    if (r.user_id != seq.user_id || r.scenario != seq.scenario)
      fail(ErrorCode::MixedUsersOrScenarios, seq.user_id + "/" + std::string(to_string(seq.scenario)) + " vs " +
                                                 r.user_id + "/" + std::string(to_string(r.scenario)));
    if (r.question_id < 1 || r.question_id > static_cast<int>(m))
      fail(ErrorCode::ValueOutOfRange, "question id " + std::to_string(r.question_id));
    auto& slot = seq.values[static_cast<std::size_t>(r.question_id - 1)];
    if (slot != 0) fail(ErrorCode::DuplicateQuestion, std::to_string(r.question_id));
    slot = r.selected_option_id;
  }
  for (std::size_t j = 0; j < m; ++j)
    if (seq.values[j] == 0) fail(ErrorCode::MissingQuestion, std::to_string(j + 1));
  return seq;
}

}  // namespace adaptprobe
