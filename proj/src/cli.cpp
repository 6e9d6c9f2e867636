// SPDX-License-Identifier: Apache-2.0
#include "CLI11.hpp"
#include "stratdisc/pipeline.hpp"

namespace stratdisc {
namespace {

void define(CLI::App& app, PipelineConfig& cfg, std::string& criterion) {
  app.add_option("--experiment", cfg.experiment, "Experiment name; data is read from <data-root>/<name>/")
      ->required();
  app.add_option("--max_num_strategies", cfg.max_num_strategies, "Largest number of clusters to try")->required();
  app.add_option("--num_participants", cfg.num_participants, "Keep the first N participants (0 keeps all)");
  app.add_option("--expert_reward", cfg.expert_reward, "Expected return of the optimal policy");
  app.add_option("--num_demos", cfg.num_demos, "Demonstrations generated per cluster");
  app.add_option("--begin", cfg.begin, "Smallest number of clusters to try");
  app.add_option("--block", cfg.block, "Data block to load, or 'all'");
  app.add_option("--seed", cfg.seed, "Master seed");
  app.add_option("--num_eval_rollouts", cfg.num_eval_rollouts, "Rollouts used for the fit statistics");
  app.add_flag("--paper-scale", cfg.paper_scale, "Use 100000 evaluation rollouts");
  app.add_option("--criterion", criterion, "Model selection criterion: bic, aic, marginal, weighted_marginal");
  app.add_option("--data-root", cfg.data_root, "Directory holding one folder per experiment");
  app.add_option("--output-dir", cfg.output_dir, "Where reports are written");
  app.add_option("--interpret_size", cfg.interpret_size, "Maximum predicates per conjunction");
  app.add_option("--num_rollouts", cfg.num_rollouts, "Rollouts per divergence estimate");
  app.add_option("--num_ai_clusters", cfg.num_ai_clusters, "Clusters of positive demonstrations");
  app.add_option("--ai_tolerance", cfg.ai_tolerance, "Allowed fraction of uncovered positives");
  app.add_option("--max_divergence", cfg.max_divergence, "Largest accepted divergence");
  app.add_option("--threshold", cfg.threshold, "Fraction of segments a condition may miss");
  app.add_option("--argmax_tolerance", cfg.argmax_tolerance, "Logit gap treated as a tie when discretizing");
  app.add_option("--tolerance", cfg.tolerance, "EM convergence tolerance");
  app.add_option("--change_tolerance", cfg.change_tolerance, "EM parameter change tolerance");
}

// Three leading dashes are accepted as two.
std::string normalize(const char* arg) {
  std::string s(arg);
  if (s.rfind("---", 0) == 0 && s.size() > 3 && s[3] != '-') s.erase(0, 1);
  return s;
}

}  // namespace

std::string usage() {
  PipelineConfig cfg;
  std::string criterion;
  CLI::App app("Discover and describe planning strategies in click data.", "stratdisc");
  define(app, cfg, criterion);
  return app.help();
}

PipelineConfig parse_cli(int argc, const char* const* argv) {
  PipelineConfig cfg;
  std::string criterion = std::string(to_string(cfg.criterion));
  CLI::App app("Discover and describe planning strategies in click data.", "stratdisc");
  define(app, cfg, criterion);

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.push_back(normalize(argv[i]));
  try {
    app.parse(args);  // CLI11 takes the arguments reversed
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string(e.what()) + "\n\n" + app.help());
  }
  auto c = criterion_from_string(criterion);
  if (!c) throw ConfigError("unknown criterion '" + criterion + "'\n\n" + app.help());
  cfg.criterion = *c;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + "\n\n" + app.help());
  }
  return cfg;
}

}  // namespace stratdisc
