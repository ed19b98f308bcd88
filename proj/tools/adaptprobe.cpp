#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adaptprobe/commands.hpp"
#include "adaptprobe/error.hpp"
#include "adaptprobe/run_config.hpp"

namespace ap = adaptprobe;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  std::optional<std::string> out;
  bool strict_degenerate = false;
  std::optional<std::uint64_t> pairing_seed;
  std::map<std::string, std::string> paths;
  std::vector<std::string> inputs;
};

ap::RunConfig build_config(const Overrides& o) {
  ap::RunConfig cfg = o.config.empty() ? ap::RunConfig{} : ap::load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.scenario) cfg.scenario = ap::parse_scenario_selection(*o.scenario);
  if (o.out) cfg.out = *o.out;
  if (o.strict_degenerate) cfg.strict_degenerate = true;
  if (o.pairing_seed) cfg.pairing_seed = *o.pairing_seed;
  for (const auto& [key, value] : o.paths)
    if (!value.empty()) cfg.paths[key] = value;
  if (!o.inputs.empty()) {
    cfg.report_inputs.clear();
    for (const auto& spec : o.inputs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) ap::fail(ap::ErrorCode::Config, "--input expects name=dir, got " + spec);
      cfg.report_inputs.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe how language models adapt survey answers to user attributes."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ap::kToolVersion));

  Overrides o;
  o.paths = {{"survey", ""},    {"profiles", ""},      {"dialogues", ""},   {"responses", ""},
             {"human_ratings", ""}, {"templates", ""}, {"country_map", ""}};

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Run configuration (JSON)");
    cmd->add_option("--seed", o.seed, "Run seed");
    cmd->add_option("--scenario", o.scenario, "profile, dialogue or both")
        ->check(CLI::IsMember({"profile", "dialogue", "both"}));
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("--strict-degenerate", o.strict_degenerate, "Exclude one-hot fallback answers from centroids");
  };
  auto path_flag = [&](CLI::App* cmd, const std::string& key) {
    std::string flag = "--" + key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    cmd->add_option(flag, o.paths[key], key + " file");
  };

  auto* generate = app.add_subcommand("generate", "Synthesize dialogues from user profiles");
  common(generate);
  path_flag(generate, "profiles");
  path_flag(generate, "templates");

  auto* judge = app.add_subcommand("judge", "Score dialogues with the judge model");
  common(judge);
  for (const char* k : {"profiles", "dialogues", "human_ratings", "templates"}) path_flag(judge, k);

  auto* probe = app.add_subcommand("probe", "Ask the survey under profile and dialogue contexts");
  common(probe);
  for (const char* k : {"survey", "profiles", "dialogues", "templates"}) path_flag(probe, k);

  auto* evaluate = app.add_subcommand("evaluate", "Compute distance and consistency reports");
  auto* replay = app.add_subcommand("replay", "Recompute reports from a responses file without network access");
  for (auto* cmd : {evaluate, replay}) {
    common(cmd);
    for (const char* k : {"survey", "profiles", "responses", "country_map"}) path_flag(cmd, k);
    cmd->add_option("--pairing-seed", o.pairing_seed, "Seed of the consistency baseline pairing");
  }

  auto* report = app.add_subcommand("report", "Render radar charts and tables from evaluation reports");
  common(report);
  report->add_option("--input", o.inputs, "Evaluation directory as name=dir (repeatable)");

  std::string template_dir = "templates";
  auto* init = app.add_subcommand("init-templates", "Write the built-in prompt templates for editing");
  init->add_option("dir", template_dir, "Destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  return ap::run_guarded(
      [&]() -> int {
        if (init->parsed()) return ap::cmd_init_templates(template_dir, std::cerr);
        const auto cfg = build_config(o);
        if (generate->parsed()) return ap::cmd_generate(cfg, std::cerr);
        if (judge->parsed()) return ap::cmd_judge(cfg, std::cerr);
        if (probe->parsed()) return ap::cmd_probe(cfg, std::cerr);
        if (evaluate->parsed()) return ap::cmd_evaluate(cfg, std::cerr);
        if (replay->parsed()) return ap::cmd_replay(cfg, std::cerr);
        return ap::cmd_report(cfg, std::cerr);
      },
      std::cerr);
}
