#include "adaptprobe/run_config.hpp"

#include <set>

#include "adaptprobe/error.hpp"
#include "adaptprobe/util.hpp"

namespace adaptprobe {

namespace {

const std::set<std::string> kPathKeys = {"survey",     "profiles",        "dialogues",      "responses",
                                         "human_ratings", "country_map",   "job_labels",     "job_rules",
                                         "position_labels", "position_rules", "templates"};
const std::set<std::string> kRoles = {"simulator", "detector", "qa", "judge", "target", "classifier"};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::optional<fs::path> bundled_path(const std::string& key) {
  static const std::map<std::string, std::string> files = {
      {"survey", "survey_vsm18.json"},          {"country_map", "country_map.tsv"},
      {"job_labels", "job_categories.txt"},     {"job_rules", "job_category_rules.tsv"},
      {"position_labels", "position_levels.txt"}, {"position_rules", "position_level_rules.tsv"},
      {"templates", "templates"}};
  auto it = files.find(key);
  if (it == files.end()) return std::nullopt;
  return fs::path(ADAPTPROBE_DATA_DIR) / it->second;
}

std::optional<fs::path> RunConfig::optional_path(const std::string& key) const {
  auto it = paths.find(key);
  if (it != paths.end()) {
    if (!fs::exists(it->second)) fail(ErrorCode::MissingFile, "missing " + key + " path: " + it->second.string());
    return it->second;
  }
  return std::nullopt;
}

fs::path RunConfig::require_path(const std::string& key) const {
  if (auto p = optional_path(key)) return *p;
  auto fallback = bundled_path(key);
  if (!fallback) fail(ErrorCode::Config, "no " + key + " path configured");
  if (!fs::exists(*fallback)) fail(ErrorCode::MissingFile, "missing " + key + " path: " + fallback->string());
  return *fallback;
}

const EndpointConfig& RunConfig::endpoint(const std::string& role) const {
  auto it = endpoints.find(role);
  if (it == endpoints.end()) fail(ErrorCode::Config, "no endpoint configured for role '" + role + "'");
  return it->second;
}

std::uint64_t RunConfig::effective_pairing_seed() const { return pairing_seed.value_or(derive_seed(seed, 4, 0)); }

json RunConfig::settings() const {
  json eps = json::object();
  for (const auto& [role, ep] : endpoints) {
    auto j = to_json(ep);
    j.erase("base_url");  // location, not behaviour
    eps[role] = j;
  }
  json attrs = json::array();
  for (auto a : attributes) attrs.push_back(to_string(a));
  return {{"seed", seed},
          {"scenario", to_string(scenario)},
          {"strict_degenerate", strict_degenerate},
          {"endpoints", eps},
          {"factory", {{"max_runs", max_runs}, {"ooc_mode", to_string(ooc_mode)}, {"timestamp", timestamp}}},
          {"probe", {{"reasoning_mode", reasoning_mode}, {"item_retries", item_retries}}},
          {"judge", {{"seeds", judge_seeds}, {"rater_mode", rater_mode == AlignmentRaters::HumanMean ? "human_mean" : "individual"}}},
          {"evaluate",
           {{"attributes", attrs},
            {"classifier_backend", classifier_backend == ClassifierBackend::MappingFile ? "mapping_file" : "endpoint"},
            {"pairing_seed", effective_pairing_seed()}}}};
}

std::string RunConfig::digest() const { return sha256_hex(settings().dump()); }

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) fail(ErrorCode::Config, "run config must be a JSON object");
  RunConfig cfg;
  try {
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
    if (doc.contains("scenario")) cfg.scenario = parse_scenario_selection(doc.at("scenario").get<std::string>());
    cfg.strict_degenerate = get_or(doc, "strict_degenerate", false);
    if (doc.contains("out")) cfg.out = resolve(base_dir, doc.at("out").get<std::string>());

    const json paths = doc.value("paths", json::object());
    for (auto& [key, value] : paths.items()) {
      if (!kPathKeys.count(key)) fail(ErrorCode::Config, "unknown path key '" + key + "'");
      cfg.paths[key] = resolve(base_dir, value.get<std::string>());
    }
    const json endpoints = doc.value("endpoints", json::object());
    for (auto& [role, value] : endpoints.items()) {
      if (!kRoles.count(role)) fail(ErrorCode::Config, "unknown endpoint role '" + role + "'");
      auto ep = endpoint_from_json(value);
      ep.validate();
      cfg.endpoints[role] = ep;
    }

    const json factory = doc.value("factory", json::object());
    cfg.max_runs = get_or(factory, "max_runs", cfg.max_runs);
    if (factory.contains("ooc_mode")) cfg.ooc_mode = parse_ooc_mode(factory.at("ooc_mode").get<std::string>());
    cfg.timestamp = get_or(factory, "timestamp", cfg.timestamp);
    cfg.workers = get_or(doc, "workers", cfg.workers);

    const json probe = doc.value("probe", json::object());
    cfg.reasoning_mode = get_or(probe, "reasoning_mode", cfg.reasoning_mode);
    cfg.item_retries = get_or(probe, "item_retries", cfg.item_retries);

    const json judge = doc.value("judge", json::object());
    cfg.judge_seeds = get_or(judge, "seeds", cfg.judge_seeds);
    if (judge.contains("rater_mode")) {
      const auto mode = judge.at("rater_mode").get<std::string>();
      if (mode == "human_mean") cfg.rater_mode = AlignmentRaters::HumanMean;
      else if (mode == "individual") cfg.rater_mode = AlignmentRaters::IndividualHumans;
      else fail(ErrorCode::Config, "rater_mode must be human_mean or individual");
    }
    if (cfg.judge_seeds < 1) fail(ErrorCode::Config, "judge.seeds must be >= 1");

    const json eval = doc.value("evaluate", json::object());
    if (eval.contains("attributes")) {
      cfg.attributes.clear();
      for (const auto& a : eval.at("attributes")) cfg.attributes.push_back(parse_cohort_attribute(a.get<std::string>()));
    }
    if (eval.contains("classifier_backend"))
      cfg.classifier_backend = parse_classifier_backend(eval.at("classifier_backend").get<std::string>());
    if (eval.contains("pairing_seed")) cfg.pairing_seed = eval.at("pairing_seed").get<std::uint64_t>();

    const json report_inputs = doc.value("report", json::object()).value("inputs", json::array());
    for (const auto& input : report_inputs)
      cfg.report_inputs.emplace_back(input.at("name").get<std::string>(),
                                     resolve(base_dir, input.at("dir").get<std::string>()));
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("run config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail(ErrorCode::Config, e.what());
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::MissingFile, "missing config path: " + path.string());
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace adaptprobe
