#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "adaptprobe/metrics.hpp"
#include "adaptprobe/run_config.hpp"

namespace adaptprobe {

/// Everything `evaluate` and `replay` compute from one responses file.
struct Evaluation {
  std::vector<DistanceReport> distances;
  std::optional<ConsistencyReport> consistency;
  std::map<Scenario, double> confidence;
  std::vector<std::string> warnings;
};

/// Pure metric pass: cohort partitions per configured attribute, distance
/// reports per present scenario, consistency when both scenarios are present.
Evaluation evaluate_responses(const RunConfig& cfg, const std::vector<ProbeResponse>& responses,
                              const std::vector<UserProfile>& profiles, const Survey& survey, const CohortAux& aux);

/// Each command writes under cfg.out and returns 0, or throws adaptprobe::Error.
int cmd_generate(const RunConfig& cfg, std::ostream& log);
int cmd_judge(const RunConfig& cfg, std::ostream& log);
int cmd_probe(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
/// Same outputs as evaluate using only the mapping-file classifier; never
/// opens a network connection.
int cmd_replay(const RunConfig& cfg, std::ostream& log);
int cmd_report(const RunConfig& cfg, std::ostream& log);
int cmd_init_templates(const fs::path& dir, std::ostream& log);

/// Runs `body`, printing any error to `err` and mapping it to an exit status.
int run_guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace adaptprobe
