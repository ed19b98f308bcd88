#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptprobe/cohorts.hpp"
#include "adaptprobe/survey_model.hpp"

namespace adaptprobe {

/// Point of the 5-simplex.
class Distribution5 {
 public:
  Distribution5() = default;
  /// Renormalizes when |sum - 1| <= 1e-6; throws InvalidDistribution otherwise
  /// or on negative / non-finite entries.
  explicit Distribution5(const std::array<double, kOptionCount>& values);
  Distribution5(const OptionDistribution& d) : p_(d.probs()) {}  // NOLINT: numeric core of the same thing

  double operator[](std::size_t k) const { return p_[k]; }
  const std::array<double, kOptionCount>& values() const noexcept { return p_; }

 private:
  std::array<double, kOptionCount> p_{};
};

/// Jensen-Shannon divergence, base 2, in [0, 1].
double jsd(const Distribution5& p, const Distribution5& q);

struct CentroidResult {
  Distribution5 centroid;
  double objective = 0.0;  // sum of JSD(centroid, input)
  int iterations = 0;
  bool converged = false;
};

struct CentroidOptions {
  double tolerance = 1e-9;  // stop once a step improves the objective by less and the gradient is flat on the support
  int max_iterations = 10000;
};

/// argmin_c sum_i JSD(c || P_i) over the simplex. Exponentiated-gradient
/// descent from the arithmetic mean with a backtracking step, so the
/// objective never rises above its value at the mean.
CentroidResult js_centroid(std::span<const Distribution5> inputs, const CentroidOptions& options = {});

/// Sum of JSD(c, P_i): the centroid objective.
double centroid_objective(const Distribution5& c, std::span<const Distribution5> inputs);

struct MetricOptions {
  bool exclude_degenerate = false;  // drop one-hot fallback answers from centroids
};

/// Per-question Jensen-Shannon centroids of one group of responses.
using CentroidTable = std::map<int, Distribution5>;
CentroidTable centroid_table(std::span<const ProbeResponse> responses, const MetricOptions& options = {});

/// Mean over questions answered by both groups of JSD between the per-question
/// group centroids. Questions missing from either group are skipped and listed
/// in `dropped`.
double group_distance(std::span<const ProbeResponse> ga, std::span<const ProbeResponse> gb, const Survey& survey,
                      const MetricOptions& options = {}, std::vector<int>* dropped = nullptr);
double group_distance(const CentroidTable& ca, const CentroidTable& cb, const Survey& survey,
                      std::vector<int>* dropped = nullptr);

/// Mean over groups and questions of JSD(group centroid, global centroid),
/// where the global centroid is taken over every response to that question.
double adaptation_baseline(const CohortPartition& partition, std::span<const ProbeResponse> responses,
                           const Survey& survey, const MetricOptions& options = {});

/// One-dimensional earth mover's distance between the option histograms of
/// two selection sequences; in [0, 4].
double emd(const SelectionSequence& su, const SelectionSequence& sd);

using SequencePair = std::pair<SelectionSequence, SelectionSequence>;  // (profile, dialogue) of one user

double consistency_score(std::span<const SequencePair> pairs);

/// Uniform random permutation of 0..n-1 without fixed points.
std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed);

/// Mean EMD over a random derangement pairing user i's profile sequence with
/// user pi(i)'s dialogue sequence.
double consistency_baseline(std::span<const SequencePair> users, std::uint64_t seed);

double divergence_ratio(double measured, double baseline);

// ---------------------------------------------------------------- reports

struct PairDistance {
  std::string group_a;
  std::string group_b;
  double distance = 0.0;
  std::optional<double> ratio;  // empty when the baseline is zero
};

struct DistanceReport {
  std::string attribute;
  Scenario scenario = Scenario::Profile;
  std::string provenance;
  std::vector<std::pair<std::string, std::size_t>> groups;  // label, responding users
  std::vector<PairDistance> pairs;                          // a before b in group order
  double baseline = 0.0;
  std::vector<int> dropped_questions;
  std::vector<std::string> warnings;

  double distance(const std::string& a, const std::string& b) const;
};

DistanceReport distance_report(const CohortPartition& partition, std::span<const ProbeResponse> responses,
                               Scenario scenario, const Survey& survey, const MetricOptions& options = {});

struct ConsistencyReport {
  double mean_emd = 0.0;
  double baseline_emd = 0.0;
  std::optional<double> ratio;
  std::map<std::string, double> per_user_emd;
  std::uint64_t pairing_seed = 0;
  std::vector<std::pair<std::string, std::string>> pairing;  // profile user -> dialogue user
};

/// Pairs each user's profile and dialogue sequences (users with both complete),
/// then scores them against a seeded derangement baseline.
ConsistencyReport consistency_report(std::span<const ProbeResponse> responses, const Survey& survey,
                                     std::uint64_t pairing_seed);

json to_json(const DistanceReport& r);
json to_json(const ConsistencyReport& r);
DistanceReport distance_report_from_json(const json& j);
ConsistencyReport consistency_report_from_json(const json& j);

}  // namespace adaptprobe
