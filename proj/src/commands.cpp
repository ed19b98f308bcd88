#include "adaptprobe/commands.hpp"

#include <memory>
#include <set>

#include "adaptprobe/error.hpp"
#include "adaptprobe/reporting.hpp"
#include "adaptprobe/templates.hpp"
#include "adaptprobe/util.hpp"

namespace adaptprobe {

namespace {

json digest_inputs(const std::map<std::string, fs::path>& inputs) {
  json out = json::object();
  for (const auto& [name, path] : inputs) out[name] = sha256_hex(read_file(path));
  return out;
}

json stage_meta(const RunConfig& cfg, const std::string& stage, const std::map<std::string, fs::path>& inputs,
                json extra = json::object()) {
  extra["stage"] = stage;
  extra["inputs"] = digest_inputs(inputs);
  return make_meta(cfg.seed, cfg.digest(), std::move(extra));
}

TemplateSet templates_for(const RunConfig& cfg, TemplateSet defaults, const char* stage) {
  if (auto dir = cfg.optional_path("templates"); dir && fs::exists(*dir / stage)) defaults.load_overrides(*dir / stage);
  return defaults;
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

std::vector<Scenario> selected_scenarios(ScenarioSelection s) {
  switch (s) {
    case ScenarioSelection::Profile: return {Scenario::Profile};
    case ScenarioSelection::Dialogue: return {Scenario::Dialogue};
    case ScenarioSelection::Both: break;
  }
  return {Scenario::Profile, Scenario::Dialogue};
}

/// Aux files and classifiers for the configured attributes. Holds ownership
/// so the raw pointers in CohortAux stay valid.
struct AuxBundle {
  CountryMap countries;
  std::unique_ptr<TextClassifier> job;
  std::unique_ptr<TextClassifier> position;
  std::map<std::string, fs::path> inputs;

  CohortAux view() const {
    CohortAux aux;
    if (countries.size() > 0) aux.country_map = &countries;
    aux.job_category = job.get();
    aux.position_level = position.get();
    return aux;
  }
};

AuxBundle load_aux(const RunConfig& cfg, ClassifierBackend backend, Gateway* gateway) {
  AuxBundle b;
  auto wants = [&](CohortAttribute a) {
    return std::find(cfg.attributes.begin(), cfg.attributes.end(), a) != cfg.attributes.end();
  };
  if (wants(CohortAttribute::DevelopmentLevel)) {
    b.inputs["country_map"] = cfg.require_path("country_map");
    b.countries = CountryMap::load(b.inputs["country_map"]);
  }
  auto make = [&](const std::string& prefix, const std::string& task) -> std::unique_ptr<TextClassifier> {
    const auto labels_key = prefix + "_labels";
    b.inputs[labels_key] = cfg.require_path(labels_key);
    auto labels = LabelSet::load(b.inputs[labels_key]);
    if (backend == ClassifierBackend::Endpoint) {
      if (!gateway) fail(ErrorCode::Config, "endpoint classifier requires network access");
      return std::make_unique<EndpointClassifier>(*gateway, cfg.endpoint("classifier"), std::move(labels), task);
    }
    const auto rules_key = prefix + "_rules";
    b.inputs[rules_key] = cfg.require_path(rules_key);
    return std::make_unique<RuleClassifier>(ClassificationRules::load(b.inputs[rules_key]), std::move(labels));
  };
  if (wants(CohortAttribute::JobCategory)) b.job = make("job", "job category of this job title");
  if (wants(CohortAttribute::PositionLevel)) b.position = make("position", "seniority level of this job title");
  return b;
}

std::string report_name(const DistanceReport& r) {
  return "distance_" + r.attribute + "_" + std::string(to_string(r.scenario)) + ".json";
}

int write_evaluation(const RunConfig& cfg, ClassifierBackend backend, Gateway* gateway, std::ostream& log) {
  std::map<std::string, fs::path> inputs = {{"responses", cfg.require_path("responses")},
                                            {"profiles", cfg.require_path("profiles")},
                                            {"survey", cfg.require_path("survey")}};
  const auto survey = load_survey(inputs["survey"]);
  const auto profiles = load_profiles(inputs["profiles"]);
  const auto responses = load_responses(inputs["responses"]);
  if (responses.empty()) fail(ErrorCode::EmptyInput, "no responses in " + inputs["responses"].string());

  AuxBundle aux = load_aux(cfg, backend, gateway);
  inputs.insert(aux.inputs.begin(), aux.inputs.end());
  const Evaluation ev = evaluate_responses(cfg, responses, profiles, survey, aux.view());

  const json meta = stage_meta(cfg, "evaluate", inputs);
  const fs::path dir = cfg.out / "reports";
  json index = {{"meta", meta}, {"distance_reports", json::array()}, {"warnings", ev.warnings}};
  for (const auto& r : ev.distances) {
    json doc = to_json(r);
    doc["meta"] = meta;
    write_json(dir / report_name(r), doc);
    index["distance_reports"].push_back(report_name(r));
  }
  if (ev.consistency) {
    json doc = to_json(*ev.consistency);
    doc["meta"] = meta;
    write_json(dir / "consistency.json", doc);
    index["consistency_report"] = "consistency.json";
  } else {
    index["consistency_report"] = nullptr;
  }
  json conf = json::object();
  for (const auto& [s, v] : ev.confidence) conf[std::string(to_string(s))] = v;
  write_json(dir / "confidence.json", {{"kind", "confidence"}, {"meta", meta}, {"mean_confidence", conf}});
  index["confidence_report"] = "confidence.json";
  write_json(cfg.out / "evaluation.json", index);

  for (const auto& w : ev.warnings) log << "warning: " << w << "\n";
  log << "wrote " << ev.distances.size() << " distance report(s)" << (ev.consistency ? " and a consistency report" : "")
      << " to " << dir.string() << "\n";
  return 0;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

}  // namespace

Evaluation evaluate_responses(const RunConfig& cfg, const std::vector<ProbeResponse>& responses,
                              const std::vector<UserProfile>& profiles, const Survey& survey, const CohortAux& aux) {
  Evaluation ev;
  MetricOptions opts;
  opts.exclude_degenerate = cfg.strict_degenerate;

  std::set<Scenario> present;
  for (const auto& r : responses) present.insert(r.scenario);
  std::vector<Scenario> scenarios;
  for (auto s : selected_scenarios(cfg.scenario)) {
    if (present.count(s)) scenarios.push_back(s);
    else ev.warnings.push_back("no " + std::string(to_string(s)) + " responses; scenario skipped");
  }
  if (scenarios.empty()) fail(ErrorCode::EmptyInput, "no responses for the selected scenario(s)");

  for (auto attribute : cfg.attributes) {
    const auto partition = partition_by(attribute, profiles, aux);
    for (auto s : scenarios) ev.distances.push_back(distance_report(partition, responses, s, survey, opts));
  }
  for (auto s : scenarios) ev.confidence[s] = mean_confidence(responses, s);

  if (present.count(Scenario::Profile) && present.count(Scenario::Dialogue) && cfg.scenario == ScenarioSelection::Both)
    ev.consistency = consistency_report(responses, survey, cfg.effective_pairing_seed());
  else
    ev.warnings.push_back("consistency skipped: needs both profile and dialogue responses");
  return ev;
}

int cmd_generate(const RunConfig& cfg, std::ostream& log) {
  const auto profiles_path = cfg.require_path("profiles");
  const auto profiles = load_profiles(profiles_path);

  FactoryConfig fc;
  fc.simulator = cfg.endpoint("simulator");
  fc.detector = cfg.endpoint("detector");
  fc.qa = cfg.endpoint("qa");
  fc.max_runs = cfg.max_runs;
  fc.ooc_mode = cfg.ooc_mode;
  fc.templates = templates_for(cfg, TemplateSet::factory_defaults(), "factory");
  fc.seed = cfg.seed;
  fc.timestamp = cfg.timestamp;
  fc.workers = cfg.workers;
  fc.validate();

  Gateway gateway;
  DialogueFactory factory(gateway, fc);
  const auto result = factory.generate_corpus(profiles);

  const json meta = stage_meta(cfg, "generate", {{"profiles", profiles_path}},
                               {{"dialogues", result.dialogues.size()}, {"skipped", result.skips.size()}});
  write_file(cfg.out / "dialogues.jsonl", dump_dialogues(result.dialogues, meta));
  write_file(cfg.out / "skipped.jsonl", dump_skip_report(result.skips, meta));
  log << "generated " << result.dialogues.size() << " dialogue(s), skipped " << result.skips.size() << "\n";
  if (result.dialogues.empty())
    fail(ErrorCode::EmptyInput, "empty corpus: all " + std::to_string(profiles.size()) + " profile(s) were skipped");
  return 0;
}

int cmd_probe(const RunConfig& cfg, std::ostream& log) {
  std::map<std::string, fs::path> inputs = {{"survey", cfg.require_path("survey")},
                                            {"profiles", cfg.require_path("profiles")}};
  std::vector<Dialogue> dialogues;
  if (cfg.scenario != ScenarioSelection::Profile) {
    inputs["dialogues"] = cfg.require_path("dialogues");
    dialogues = load_dialogues(inputs["dialogues"]);
  }
  const auto survey = load_survey(inputs["survey"]);
  const auto profiles = load_profiles(inputs["profiles"]);

  ProbeConfig pc;
  pc.target = cfg.endpoint("target");
  pc.reasoning_mode = cfg.reasoning_mode;
  pc.templates = templates_for(cfg, TemplateSet::probe_defaults(), "probe");
  pc.seed = cfg.seed;
  pc.item_retries = cfg.item_retries;
  pc.workers = cfg.workers;

  Gateway gateway;
  ValueProbe probe(gateway, pc);
  const auto responses = probe.probe_run(survey, profiles, dialogues, cfg.scenario);
  const json meta = stage_meta(cfg, "probe", inputs, {{"responses", responses.size()}, {"model", pc.target.model_name}});
  write_file(cfg.out / "responses.jsonl", dump_responses(responses, meta));
  log << "wrote " << responses.size() << " response(s)\n";
  return 0;
}

int cmd_judge(const RunConfig& cfg, std::ostream& log) {
  std::map<std::string, fs::path> inputs = {{"dialogues", cfg.require_path("dialogues")},
                                            {"profiles", cfg.require_path("profiles")}};
  const auto dialogues = load_dialogues(inputs["dialogues"]);
  const auto profiles = load_profiles(inputs["profiles"]);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.judge_seeds; ++i) seeds.push_back(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(i)));

  Gateway gateway;
  QualityJudge judge(gateway, cfg.endpoint("judge"), templates_for(cfg, TemplateSet::judge_defaults(), "judge"));
  const auto scores = judge.judge_corpus(dialogues, profiles, seeds, cfg.workers);
  const auto summary = aggregate_scores(scores);

  std::vector<AlignmentRow> alignment;
  json human_corpus = json::object();
  if (auto path = cfg.optional_path("human_ratings")) {
    inputs["human_ratings"] = *path;
    const auto human = load_human_ratings(*path);
    alignment = alignment_table(human, summary, cfg.rater_mode);
    for (auto dim : kJudgeDimensions) {
      std::map<std::string, std::pair<double, int>> per_item;
      for (const auto& h : human) {
        if (h.dimension != dim) continue;
        per_item[h.item_id].first += h.score;
        ++per_item[h.item_id].second;
      }
      if (per_item.empty()) continue;
      double sum = 0;
      for (const auto& [_, acc] : per_item) sum += acc.first / acc.second;
      human_corpus[std::string(to_string(dim))] = sum / static_cast<double>(per_item.size());
    }
  }

  const json meta = stage_meta(cfg, "judge", inputs, {{"judge_seeds", seeds}});
  std::vector<json> records;
  for (const auto& s : scores) records.push_back(to_json(s));
  write_file(cfg.out / "judge_scores.jsonl", dump_jsonl(records, meta));
  json report = judge_report(summary, alignment, meta);
  report["human_corpus"] = human_corpus;
  write_json(cfg.out / "judge_report.json", report);
  log << "judged " << dialogues.size() << " dialogue(s) under " << seeds.size() << " seed(s)\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.classifier_backend == ClassifierBackend::Endpoint) {
    Gateway gateway;
    return write_evaluation(cfg, cfg.classifier_backend, &gateway, log);
  }
  return write_evaluation(cfg, cfg.classifier_backend, nullptr, log);
}

int cmd_replay(const RunConfig& cfg, std::ostream& log) {
  return write_evaluation(cfg, ClassifierBackend::MappingFile, nullptr, log);
}

int cmd_report(const RunConfig& cfg, std::ostream& log) {
  auto inputs_list = cfg.report_inputs;
  if (inputs_list.empty()) inputs_list.emplace_back("run", cfg.out);

  std::map<std::string, fs::path> digests;
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, DistanceReport>>> radar_groups;
  std::vector<std::pair<std::string, DistanceReport>> all_distances;
  std::vector<ConfidenceRow> confidence;
  std::vector<ConsistencyRow> consistency;
  std::vector<JudgeRow> judge_rows;
  std::vector<AlignmentCsvRow> alignment_rows;
  std::size_t reports_read = 0;

  for (const auto& [name, dir] : inputs_list) {
    const fs::path index_path = dir / "evaluation.json";
    if (!fs::exists(index_path)) fail(ErrorCode::MissingFile, "missing evaluation index: " + index_path.string());
    digests[name] = index_path;
    const json index = read_json(index_path);
    try {
      for (const auto& file : index.at("distance_reports")) {
        const auto report = distance_report_from_json(read_json(dir / "reports" / file.get<std::string>()));
        radar_groups[{report.attribute, std::string(to_string(report.scenario))}].emplace_back(name, report);
        all_distances.emplace_back(name, report);
        ++reports_read;
      }
      if (index.contains("consistency_report") && !index.at("consistency_report").is_null()) {
        consistency.push_back(
            {name, consistency_report_from_json(read_json(dir / "reports" / index.at("consistency_report").get<std::string>()))});
        ++reports_read;
      }
      if (index.contains("confidence_report")) {
        const json conf = read_json(dir / "reports" / index.at("confidence_report").get<std::string>());
        for (auto& [scenario, value] : conf.at("mean_confidence").items())
          confidence.push_back({name, scenario, value.get<double>()});
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::SchemaViolation, index_path.string() + ": " + e.what());
    }

    const fs::path judge_path = dir / "judge_report.json";
    if (fs::exists(judge_path)) {
      const json jr = read_json(judge_path);
      try {
        for (auto dim : kJudgeDimensions) {
          const std::string key(to_string(dim));
          if (!jr.at("corpus").contains(key)) continue;
          const std::string label(display_name(dim));
          JudgeRow row{name == "run" ? label : name + ": " + label, jr.at("corpus").at(key).get<double>(), {}};
          if (jr.contains("human_corpus") && jr.at("human_corpus").contains(key))
            row.human = jr.at("human_corpus").at(key).get<double>();
          judge_rows.push_back(row);
        }
        for (const auto& a : jr.at("alignment"))
          alignment_rows.push_back({std::string(display_name(parse_dimension(a.at("dimension").get<std::string>()))),
                                    a.at("items").get<std::size_t>(), a.at("icc3k").get<double>(),
                                    a.at("pearson").get<double>()});
      } catch (const json::exception& e) {
        fail(ErrorCode::SchemaViolation, judge_path.string() + ": " + e.what());
      }
    }
  }
  if (reports_read == 0) fail(ErrorCode::EmptyInput, "empty report: no distance or consistency reports found");

  const json meta = stage_meta(cfg, "report", digests);
  std::size_t charts = 0;
  for (const auto& [key, runs] : radar_groups) {
    auto spec = radar_from_reports(runs);
    if (!spec) {
      log << "warning: " << key.first << "/" << key.second
          << " needs at least 3 group pairs and a nonzero baseline; radar skipped\n";
      continue;
    }
    write_file(cfg.out / "figures" / ("radar_" + key.first + "_" + key.second + ".svg"), render_radar_svg(*spec, meta));
    ++charts;
  }
  const fs::path tables = cfg.out / "tables";
  write_file(tables / "distances.csv", distance_csv(all_distances, meta));
  write_file(tables / "confidence.csv", confidence_csv(confidence, meta));
  if (!consistency.empty()) write_file(tables / "consistency.csv", consistency_csv(consistency, meta));
  if (!judge_rows.empty()) write_file(tables / "judge_scores.csv", judge_scores_csv(judge_rows, meta));
  if (!alignment_rows.empty()) write_file(tables / "alignment.csv", alignment_csv(alignment_rows, meta));
  log << "wrote " << charts << " radar chart(s) and tables to " << cfg.out.string() << "\n";
  return 0;
}

int cmd_init_templates(const fs::path& dir, std::ostream& log) {
  TemplateSet::factory_defaults().write_to(dir / "factory");
  TemplateSet::probe_defaults().write_to(dir / "probe");
  TemplateSet::judge_defaults().write_to(dir / "judge");
  log << "wrote default templates to " << dir.string() << "\n";
  return 0;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace adaptprobe
