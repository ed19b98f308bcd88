#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptprobe/metrics.hpp"
#include "adaptprobe/util.hpp"

namespace adaptprobe {

/// One radar chart: an axis per group pair, one polygon per run.
struct RadarSpec {
  std::string title;
  std::vector<std::string> axes;
  std::vector<std::pair<std::string, std::vector<double>>> series;  // run name, value per axis
  double baseline = 1.0;

  void validate() const;  // >= 3 axes, one non-negative value per axis
};

/// Ratio-to-baseline radar for one (attribute, scenario) across runs. Axes
/// are the pairs of the first report, labelled "a vs b". Returns nullopt when
/// there are fewer than three pairs or no run has a defined baseline.
std::optional<RadarSpec> radar_from_reports(const std::vector<std::pair<std::string, DistanceReport>>& runs);

std::string render_radar_svg(const RadarSpec& spec, const json& meta);

struct ConfidenceRow {
  std::string run;
  std::string scenario;
  double mean_confidence = 0.0;
};

struct ConsistencyRow {
  std::string run;
  ConsistencyReport report;
};

struct JudgeRow {
  std::string dimension;
  double judge = 0.0;
  std::optional<double> human;
};

struct AlignmentCsvRow {
  std::string dimension;
  std::size_t items = 0;
  double icc3k = 0.0;
  double pearson = 0.0;
};

/// CSV with `# key=value` metadata lines before the header row.
std::string confidence_csv(const std::vector<ConfidenceRow>& rows, const json& meta);
std::string consistency_csv(const std::vector<ConsistencyRow>& rows, const json& meta);
std::string judge_scores_csv(const std::vector<JudgeRow>& rows, const json& meta);
std::string alignment_csv(const std::vector<AlignmentCsvRow>& rows, const json& meta);
std::string distance_csv(const std::vector<std::pair<std::string, DistanceReport>>& runs, const json& meta);

}  // namespace adaptprobe
