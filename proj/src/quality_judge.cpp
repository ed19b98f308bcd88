#include "adaptprobe/quality_judge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

std::string_view to_string(JudgeDimension d) {
  switch (d) {
    case JudgeDimension::AttributeCoverage: return "attribute_coverage";
    case JudgeDimension::AttributeCorrectness: return "attribute_correctness";
    case JudgeDimension::QuestionDiversity: return "question_diversity";
    case JudgeDimension::Relevance: return "relevance";
  }
  return "attribute_coverage";
}

std::string_view display_name(JudgeDimension d) {
  switch (d) {
    case JudgeDimension::AttributeCoverage: return "Attribute Coverage";
    case JudgeDimension::AttributeCorrectness: return "Attribute Correctness";
    case JudgeDimension::QuestionDiversity: return "Question Diversity";
    case JudgeDimension::Relevance: return "Relevance";
  }
  return "Attribute Coverage";
}

JudgeDimension parse_dimension(std::string_view text) {
  for (auto d : kJudgeDimensions)
    if (text == to_string(d) || text == display_name(d)) return d;
  fail(ErrorCode::SchemaViolation, "unknown judge dimension '" + std::string(text) + "'");
}

json to_json(const JudgeScore& s) {
  return {{"user_id", s.dialogue_user_id},
          {"dimension", to_string(s.dimension)},
          {"score", s.score},
          {"rationale", s.rationale},
          {"seed", s.seed}};
}

void RatingMatrix::validate() const {
  if (targets.size() < 2 || raters.size() < 2)
    fail(ErrorCode::IncompleteMatrix, "need at least 2 targets and 2 raters");
  if (cells.size() != targets.size()) fail(ErrorCode::IncompleteMatrix, "row count does not match targets");
  for (const auto& row : cells) {
    if (row.size() != raters.size()) fail(ErrorCode::IncompleteMatrix, "row length does not match raters");
    for (double v : row)
      if (!std::isfinite(v)) fail(ErrorCode::IncompleteMatrix, "missing or non-finite cell");
  }
}

OutputSchema judge_schema() {
  FieldSpec score{"score", FieldType::Integer};
  score.min = 0;
  score.max = 5;
  FieldSpec rationale{"rationale", FieldType::String};
  rationale.non_empty = true;
  return {"dimension_score", {score, rationale}};
}

QualityJudge::QualityJudge(Gateway& gateway, EndpointConfig judge, TemplateSet templates)
    : gateway_(gateway), endpoint_(std::move(judge)), templates_(std::move(templates)) {
  endpoint_.validate();
  templates_.require("judge_system", {"RUBRIC"});
  templates_.require("judge_user", {"PROFILE", "DIALOGUE"});
  for (auto d : kJudgeDimensions) templates_.get("rubric_" + std::string(to_string(d)));
}

JudgeScore QualityJudge::judge_dimension(const Dialogue& dialogue, const UserProfile& profile,
                                         JudgeDimension dimension, std::uint64_t seed) const {
  if (dialogue.user_id != profile.user_id)
    fail(ErrorCode::PreconditionViolation, "dialogue " + dialogue.user_id + " paired with profile " + profile.user_id);
  ChatRequest req;
  req.messages = {
      {"system", render_template(templates_.get("judge_system"),
                                 {{"RUBRIC", templates_.get("rubric_" + std::string(to_string(dimension)))}})},
      {"user", render_template(templates_.get("judge_user"), {{"PROFILE", render_profile_block(profile)},
                                                               {"DIALOGUE", render_history_block(dialogue.turns)}})}};
  req.temperature = 0.0;
  req.output_schema = judge_schema();
  req.seed = seed;

  StructuredResult result;
  try {
    result = gateway_.complete_structured(endpoint_, req);
  } catch (const StructuredOutputError& e) {
    if (auto last = extract_json_object(e.last_raw_text());
        last && last->contains("score") && last->at("score").is_number())
      fail(ErrorCode::ScoreOutOfRange, dialogue.user_id + "/" + std::string(to_string(dimension)) + ": " +
                                           last->at("score").dump());
    throw;
  }
  return {dialogue.user_id, dimension, result.value.at("score").get<double>(),
          result.value.at("rationale").get<std::string>(), seed};
}

std::vector<JudgeScore> QualityJudge::judge_corpus(const std::vector<Dialogue>& dialogues,
                                                   const std::vector<UserProfile>& profiles,
                                                   const std::vector<std::uint64_t>& seeds, int workers) const {
  std::map<std::string, const UserProfile*> by_id;
  for (const auto& p : profiles) by_id[p.user_id] = &p;
  struct Job {
    const Dialogue* dialogue;
    const UserProfile* profile;
    JudgeDimension dimension;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& d : dialogues) {
    auto it = by_id.find(d.user_id);
    if (it == by_id.end()) fail(ErrorCode::PreconditionViolation, "no profile for dialogue " + d.user_id);
    for (auto dim : kJudgeDimensions)
      for (auto s : seeds) jobs.push_back({&d, it->second, dim, s});
  }

  std::vector<JudgeScore> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto& j = jobs[i];
        out[i] = judge_dimension(*j.dialogue, *j.profile, j.dimension, j.seed);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const auto count = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(workers > 0 ? workers : endpoint_.max_concurrency), jobs.size()));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

// ---------------------------------------------------------------- aggregation

ScoreSummary aggregate_scores(std::span<const JudgeScore> scores) {
  if (scores.empty()) fail(ErrorCode::EmptyGroup, "no judge scores");
  std::map<std::pair<std::string, JudgeDimension>, std::pair<double, int>> sums;
  for (const auto& s : scores) {
    auto& acc = sums[{s.dialogue_user_id, s.dimension}];
    acc.first += s.score;
    ++acc.second;
  }
  ScoreSummary out;
  std::map<JudgeDimension, std::pair<double, int>> corpus;
  for (const auto& [key, acc] : sums) {
    double mean = acc.first / acc.second;
    out.per_dialogue[key] = mean;
    auto& c = corpus[key.second];
    c.first += mean;
    ++c.second;
  }
  for (const auto& [dim, acc] : corpus) out.corpus[dim] = acc.first / acc.second;
  return out;
}

// ---------------------------------------------------------------- statistics

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 2) fail(ErrorCode::LengthMismatch, "need at least two observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) fail(ErrorCode::ZeroVariance, "an input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double icc3k(const RatingMatrix& m) {
  m.validate();
  const std::size_t n = m.targets.size(), k = m.raters.size();
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += m.cells[i][j];
      col_mean[j] += m.cells[i][j];
      grand += m.cells[i][j];
    }
  for (auto& v : row_mean) v /= static_cast<double>(k);
  for (auto& v : col_mean) v /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_rows = 0.0, ss_total = 0.0, ss_cols = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  ss_rows *= static_cast<double>(k);
  for (std::size_t j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_cols *= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) ss_total += (m.cells[i][j] - grand) * (m.cells[i][j] - grand);
  const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

  const double bms = ss_rows / static_cast<double>(n - 1);
  const double ems = ss_error / static_cast<double>((n - 1) * (k - 1));
  if (bms <= 1e-14 * std::max(1.0, grand * grand))
    fail(ErrorCode::DegenerateBetweenVariance, "between-target mean square is zero");
  return (bms - ems) / bms;
}

// ---------------------------------------------------------------- human alignment

std::vector<HumanRating> parse_human_ratings(const JsonLines& lines) {
  std::vector<HumanRating> out;
  for (const auto& rec : lines.records) {
    try {
      HumanRating h;
      h.item_id = rec.at("item_id").get<std::string>();
      h.rater_id = rec.at("rater_id").get<std::string>();
      h.dimension = parse_dimension(rec.at("dimension").get<std::string>());
      h.score = rec.at("score").get<double>();
      if (h.score < 0 || h.score > 5) fail(ErrorCode::ScoreOutOfRange, h.item_id + "/" + h.rater_id);
      out.push_back(std::move(h));
    } catch (const json::exception& e) {
      fail(ErrorCode::SchemaViolation, std::string("human rating: ") + e.what());
    }
  }
  return out;
}

std::vector<HumanRating> load_human_ratings(const std::filesystem::path& path) {
  return parse_human_ratings(read_jsonl(path));
}

RatingMatrix alignment_matrix(const std::vector<HumanRating>& human, const ScoreSummary& judge,
                              JudgeDimension dimension, AlignmentRaters mode) {
  std::map<std::string, std::map<std::string, double>> by_item;  // item -> rater -> score
  std::set<std::string> raters;
  for (const auto& h : human) {
    if (h.dimension != dimension) continue;
    by_item[h.item_id][h.rater_id] = h.score;
    raters.insert(h.rater_id);
  }
  RatingMatrix m;
  if (mode == AlignmentRaters::HumanMean)
    m.raters = {"human_mean", "judge_mean"};
  else {
    m.raters.assign(raters.begin(), raters.end());
    m.raters.push_back("judge_mean");
  }
  for (const auto& [item, scores] : by_item) {
    auto jt = judge.per_dialogue.find({item, dimension});
    if (jt == judge.per_dialogue.end()) continue;
    std::vector<double> row;
    if (mode == AlignmentRaters::HumanMean) {
      double sum = 0;
      for (const auto& [r, s] : scores) sum += s;
      row.push_back(sum / static_cast<double>(scores.size()));
    } else {
      for (const auto& r : raters) {
        auto it = scores.find(r);
        if (it == scores.end()) fail(ErrorCode::IncompleteMatrix, "rater " + r + " did not score " + item);
        row.push_back(it->second);
      }
    }
    row.push_back(jt->second);
    m.targets.push_back(item);
    m.cells.push_back(std::move(row));
  }
  return m;
}

std::vector<AlignmentRow> alignment_table(const std::vector<HumanRating>& human, const ScoreSummary& judge,
                                          AlignmentRaters mode) {
  std::vector<AlignmentRow> out;
  for (auto dim : kJudgeDimensions) {
    auto m = alignment_matrix(human, judge, dim, mode);
    if (m.targets.empty()) continue;
    std::vector<double> h, j;
    for (const auto& row : m.cells) {
      double sum = 0;
      for (std::size_t r = 0; r + 1 < row.size(); ++r) sum += row[r];
      h.push_back(sum / static_cast<double>(row.size() - 1));
      j.push_back(row.back());
    }
    out.push_back({dim, m.targets.size(), icc3k(m), pearson(h, j)});
  }
  return out;
}

json judge_report(const ScoreSummary& summary, const std::vector<AlignmentRow>& alignment, const json& meta) {
  json per_dialogue = json::array();
  std::map<std::string, json> rows;
  for (const auto& [key, mean] : summary.per_dialogue) rows[key.first][std::string(to_string(key.second))] = mean;
  for (auto& [user, means] : rows) per_dialogue.push_back({{"user_id", user}, {"means", means}});
  json corpus = json::object();
  for (const auto& [dim, mean] : summary.corpus) corpus[std::string(to_string(dim))] = mean;
  json align = json::array();
  for (const auto& a : alignment)
    align.push_back({{"dimension", to_string(a.dimension)}, {"items", a.items}, {"icc3k", a.icc3k}, {"pearson", a.pearson}});
  return {{"meta", meta}, {"per_dialogue", per_dialogue}, {"corpus", corpus}, {"alignment", align}};
}

}  // namespace adaptprobe
