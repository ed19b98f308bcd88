#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptprobe/cohorts.hpp"
#include "adaptprobe/dialogue_factory.hpp"
#include "adaptprobe/llm_gateway.hpp"
#include "adaptprobe/quality_judge.hpp"
#include "adaptprobe/value_probe.hpp"

namespace adaptprobe {

namespace fs = std::filesystem;

/// Settings for one pipeline invocation. Relative paths in a config file
/// resolve against the file's directory; paths given on the command line
/// resolve against the working directory.
struct RunConfig {
  std::uint64_t seed = 0;
  ScenarioSelection scenario = ScenarioSelection::Both;
  bool strict_degenerate = false;
  fs::path out = "out";

  /// survey, profiles, dialogues, responses, human_ratings, country_map,
  /// job_labels, job_rules, position_labels, position_rules, templates
  std::map<std::string, fs::path> paths;
  /// simulator, detector, qa, judge, target, classifier
  std::map<std::string, EndpointConfig> endpoints;

  int max_runs = 5;
  OocMode ooc_mode = OocMode::Revise;
  std::string timestamp = "1970-01-01T00:00:00Z";
  int workers = 0;

  bool reasoning_mode = false;
  int item_retries = 2;

  int judge_seeds = 10;
  AlignmentRaters rater_mode = AlignmentRaters::HumanMean;

  std::vector<CohortAttribute> attributes{kCohortAttributes.begin(), kCohortAttributes.end()};
  ClassifierBackend classifier_backend = ClassifierBackend::MappingFile;
  std::optional<std::uint64_t> pairing_seed;

  std::vector<std::pair<std::string, fs::path>> report_inputs;  // run name, evaluation directory

  /// Configured path for `key`, falling back to the bundled data file when
  /// one exists. Throws Config when neither is available and MissingFile when
  /// the path does not exist.
  fs::path require_path(const std::string& key) const;
  std::optional<fs::path> optional_path(const std::string& key) const;
  const EndpointConfig& endpoint(const std::string& role) const;

  std::uint64_t effective_pairing_seed() const;

  /// Result-affecting settings without filesystem locations; hashed into
  /// every artifact's metadata.
  json settings() const;
  std::string digest() const;
};

RunConfig parse_run_config(const json& doc, const fs::path& base_dir);
RunConfig load_run_config(const fs::path& path);

/// Bundled default for a path key (survey, country map, label and rule files).
std::optional<fs::path> bundled_path(const std::string& key);

}  // namespace adaptprobe
