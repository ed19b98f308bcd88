#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adaptprobe/llm_gateway.hpp"
#include "adaptprobe/survey_model.hpp"
#include "adaptprobe/templates.hpp"

namespace adaptprobe {

enum class JudgeDimension { AttributeCoverage, AttributeCorrectness, QuestionDiversity, Relevance };
inline constexpr std::array<JudgeDimension, 4> kJudgeDimensions = {
    JudgeDimension::AttributeCoverage, JudgeDimension::AttributeCorrectness, JudgeDimension::QuestionDiversity,
    JudgeDimension::Relevance};

std::string_view to_string(JudgeDimension d);
/// Display name, e.g. "Attribute Coverage".
std::string_view display_name(JudgeDimension d);
JudgeDimension parse_dimension(std::string_view text);

struct JudgeScore {
  std::string dialogue_user_id;
  JudgeDimension dimension = JudgeDimension::AttributeCoverage;
  double score = 0.0;
  std::string rationale;
  std::uint64_t seed = 0;
};

json to_json(const JudgeScore& s);

/// cells[t][r] is rater r's score for target t.
struct RatingMatrix {
  std::vector<std::string> targets;
  std::vector<std::string> raters;
  std::vector<std::vector<double>> cells;

  void validate() const;
};

class QualityJudge {
 public:
  QualityJudge(Gateway& gateway, EndpointConfig judge, TemplateSet templates = TemplateSet::judge_defaults());

  /// One call per (dialogue, dimension, seed) at temperature 0.
  JudgeScore judge_dimension(const Dialogue& dialogue, const UserProfile& profile, JudgeDimension dimension,
                             std::uint64_t seed) const;

  /// Every dimension for every dialogue under each seed. Dialogues without a
  /// profile are a precondition violation. Output order: dialogue, dimension,
  /// seed.
  std::vector<JudgeScore> judge_corpus(const std::vector<Dialogue>& dialogues, const std::vector<UserProfile>& profiles,
                                       const std::vector<std::uint64_t>& seeds, int workers = 0) const;

 private:
  Gateway& gateway_;
  EndpointConfig endpoint_;
  TemplateSet templates_;
};

OutputSchema judge_schema();

struct ScoreSummary {
  std::map<std::pair<std::string, JudgeDimension>, double> per_dialogue;  // mean over seeds
  std::map<JudgeDimension, double> corpus;                                // mean of per-dialogue means
};

ScoreSummary aggregate_scores(std::span<const JudgeScore> scores);

double pearson(std::span<const double> x, std::span<const double> y);

/// ICC(3,k), two-way mixed effects, consistency, average of k raters:
/// (BMS - EMS) / BMS.
double icc3k(const RatingMatrix& matrix);

struct HumanRating {
  std::string item_id;
  std::string rater_id;
  JudgeDimension dimension = JudgeDimension::AttributeCoverage;
  double score = 0.0;
};

std::vector<HumanRating> load_human_ratings(const std::filesystem::path& path);
std::vector<HumanRating> parse_human_ratings(const JsonLines& lines);

enum class AlignmentRaters { HumanMean, IndividualHumans };

/// Rating matrix over items shared by the human ratings and the judge means
/// for one dimension. Raters are {human-mean, judge-mean} or each human rater
/// followed by the judge.
RatingMatrix alignment_matrix(const std::vector<HumanRating>& human, const ScoreSummary& judge,
                              JudgeDimension dimension, AlignmentRaters mode);

struct AlignmentRow {
  JudgeDimension dimension;
  std::size_t items = 0;
  double icc3k = 0.0;
  double pearson = 0.0;
};

std::vector<AlignmentRow> alignment_table(const std::vector<HumanRating>& human, const ScoreSummary& judge,
                                          AlignmentRaters mode);

json judge_report(const ScoreSummary& summary, const std::vector<AlignmentRow>& alignment, const json& meta);

}  // namespace adaptprobe
