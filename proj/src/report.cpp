// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stratdisc/errors.hpp"
#include "stratdisc/pipeline.hpp"

namespace stratdisc {
namespace {

std::string fixed(double x, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + p.string());
}

}  // namespace

std::string report_basename(const PipelineConfig& cfg) {
  return "strategies_" + cfg.experiment + "_" + std::to_string(cfg.max_num_strategies) + "_" +
         std::to_string(cfg.num_participants) + "_" + std::to_string(cfg.num_demos);
}

std::string report_text(const StrategyReport& r) {
  std::ostringstream out;
  const auto& c = r.config;
  out << "Experiment: " << c.experiment << "\n";
  out << "Trajectories: " << r.num_trajectories << ", planning operations: " << r.num_operations << "\n";
  out << "Models tried: k = " << c.begin << ".." << c.max_num_strategies << ", selected k = " << r.selected_k
      << " by " << to_string(c.criterion) << "\n";
  out << "Demonstrations per cluster: " << c.num_demos << ", evaluation rollouts: " << c.eval_rollouts()
      << ", seed: " << c.seed << "\n";
  out << "Likelihood per click: " << fixed(r.likelihood_per_click) << "\n";
  out << "Random likelihood per click: " << fixed(r.random_likelihood_per_click) << "\n";
  out << "Times better than random: " << fixed(r.times_better_than_random) << "\n";
  out << "Unique strategies: " << r.strategies.size() << "\n";

  for (std::size_t i = 0; i < r.strategies.size(); ++i) {
    const auto& s = r.strategies[i];
    out << "\n--- Strategy " << (i + 1) << " ---\n";
    out << "Formula:\n" << s.formula << "\n\n";
    out << "Description:\n" << s.description << "\n\n";
    out << "FR: " << fixed(s.fr) << "  FCF: " << fixed(s.fcf) << "  FON: " << fixed(s.fon)
        << "  FPO: " << fixed(s.fpo) << "  C: " << s.complexity << "  N: " << s.n << "\n";
    out << "Weighted  FCF: " << fixed(s.fcf_weighted) << "  FON: " << fixed(s.fon_weighted)
        << "  FPO: " << fixed(s.fpo_weighted) << "\n";
    out << "Clusters:";
    for (auto k : s.clusters) out << " " << k;
    out << "\n";
  }

  out << "\n--- Model scores ---\n" << scores_tsv(r.scores);
  return out.str();
}

nlohmann::json report_json(const StrategyReport& r) {
  using nlohmann::json;
  const auto& c = r.config;
  json j;
  j["experiment"] = c.experiment;
  j["config"] = {{"num_participants", c.num_participants},
                 {"block", c.block},
                 {"max_num_strategies", c.max_num_strategies},
                 {"begin", c.begin},
                 {"num_demos", c.num_demos},
                 {"expert_reward", c.expert_reward},
                 {"tolerance", c.tolerance},
                 {"change_tolerance", c.change_tolerance},
                 {"interpret_size", c.interpret_size},
                 {"ai_tolerance", c.ai_tolerance},
                 {"num_rollouts", c.num_rollouts},
                 {"num_ai_clusters", c.num_ai_clusters},
                 {"max_divergence", c.max_divergence},
                 {"threshold", c.threshold},
                 {"argmax_tolerance", c.argmax_tolerance},
                 {"num_eval_rollouts", c.eval_rollouts()},
                 {"criterion", std::string(to_string(c.criterion))},
                 {"seed", c.seed}};
  j["num_trajectories"] = r.num_trajectories;
  j["num_operations"] = r.num_operations;
  j["selected_k"] = r.selected_k;
  j["likelihood_per_click"] = r.likelihood_per_click;
  j["random_likelihood_per_click"] = r.random_likelihood_per_click;
  j["times_better_than_random"] = r.times_better_than_random;
  j["strategies"] = json::array();
  for (const auto& s : r.strategies)
    j["strategies"].push_back({{"formula", s.formula},
                               {"description", s.description},
                               {"FR", s.fr},
                               {"FCF", s.fcf},
                               {"FON", s.fon},
                               {"FPO", s.fpo},
                               {"FCF_weighted", s.fcf_weighted},
                               {"FON_weighted", s.fon_weighted},
                               {"FPO_weighted", s.fpo_weighted},
                               {"C", s.complexity},
                               {"N", s.n},
                               {"clusters", s.clusters}});
  j["clusters"] = json::array();
  for (const auto& s : r.cluster_stats)
    j["clusters"].push_back(
        {{"FR", s.fr}, {"FCF", s.fcf}, {"FON", s.fon}, {"FPO", s.fpo}, {"C", s.complexity}});
  j["model_scores"] = json::array();
  for (const auto& s : r.scores)
    j["model_scores"].push_back({{"k", s.k},
                                 {"admissible", s.admissible},
                                 {"log_likelihood", s.log_likelihood},
                                 {"bic", s.bic},
                                 {"aic", s.aic},
                                 {"log_marginal", s.log_marginal},
                                 {"beta_log_marginal", s.beta_log_marginal},
                                 {"weighted_marginal", s.weighted_marginal},
                                 {"epsilons", s.epsilons}});
  return j;
}

std::string write_report(const StrategyReport& r) {
  const std::filesystem::path dir(r.config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  const std::string base = report_basename(r.config);
  write_file(dir / base, report_text(r));
  write_file(dir / (base + ".json"), report_json(r).dump(2) + "\n");
  write_file(dir / (base + "_model_scores.tsv"), scores_tsv(r.scores));
  return (dir / base).string();
}

}  // namespace stratdisc
