// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratdisc/errors.hpp"
#include "stratdisc/clustering.hpp"
#include "stratdisc/induction.hpp"
#include "stratdisc/procedural.hpp"
#include "stratdisc/trace.hpp"

namespace stratdisc {

struct PipelineConfig {
  std::string experiment;
  std::size_t num_participants = 0;  // 0 keeps everyone
  std::string block = "all";
  std::size_t max_num_strategies = 0;
  std::size_t begin = 1;
  std::size_t num_demos = 128;
  double expert_reward = 39.97;

  double tolerance = 1e-4;
  double change_tolerance = 1e-5;
  std::size_t interpret_size = 5;
  double ai_tolerance = 0.025;
  std::size_t num_rollouts = 10000;
  std::size_t num_ai_clusters = 4;
  double max_divergence = 0.2;
  double threshold = 0.5;
  /// Logit gap under which actions count as tied when discretizing.
  double argmax_tolerance = 0.5;

  std::size_t em_restarts = 5;
  std::size_t em_max_iterations = 200;
  std::size_t num_eval_rollouts = 10000;
  bool paper_scale = false;  // 100000 evaluation rollouts
  Criterion criterion = Criterion::bic;
  std::uint64_t seed = 0;
  std::string data_root = "data/human";
  std::string output_dir = "interprets_procedure";

  /// Throws ConfigError.
  void validate() const;
  std::size_t eval_rollouts() const { return paper_scale ? 100000 : num_eval_rollouts; }
};

/// Induction outcome for one EM cluster.
struct ClusterOutcome {
  Weights weights{};
  std::vector<std::size_t> members;  // trajectory indices, hard assignment
  bool described = false;
  std::string failure;
  Dnf dnf;
  ProceduralFormula formula;
  double divergence = 0.0;
  double used_fraction = 0.0;
};

struct ModelRun {
  std::size_t k = 0;
  EmResult em;
  std::vector<ClusterOutcome> clusters;
  ModelScore score;
};

/// Fit statistics of one cluster under its description.
struct ClusterStats {
  double fr = 0.0, fcf = 0.0, fon = 0.0, fpo = 0.0;
  int complexity = 0;
};

/// One unique description with the merged statistics of its clusters.
struct Strategy {
  std::string formula;
  std::string description;
  std::vector<std::size_t> clusters;
  double fr = 0.0;   // summed
  double fcf = 0.0, fon = 0.0, fpo = 0.0;  // unweighted means
  double fcf_weighted = 0.0, fon_weighted = 0.0, fpo_weighted = 0.0;
  int complexity = 0;
  std::size_t n = 0;
};

struct StrategyReport {
  PipelineConfig config;
  std::size_t num_trajectories = 0;
  std::size_t num_operations = 0;
  std::size_t selected_k = 0;
  std::vector<ModelScore> scores;
  std::vector<ClusterStats> cluster_stats;
  std::vector<Strategy> strategies;
  double likelihood_per_click = 0.0;
  double random_likelihood_per_click = 0.0;
  double times_better_than_random = 0.0;
};

struct PipelineResult {
  std::vector<ModelRun> runs;
  StrategyReport report;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Cluster, describe every cluster, select a model and report on it.
/// Throws NoAdmissibleModel when no k describes all of its clusters.
PipelineResult run_pipeline(const PipelineConfig& cfg, const Dataset& data, const ProgressFn& progress = {});
/// Loads the data named by the configuration first.
PipelineResult run_pipeline(const PipelineConfig& cfg, const ProgressFn& progress = {});

/// Describe one cluster policy: demonstrations, AI-Interpret, DNF2LTL, pruning.
ClusterOutcome describe_cluster(const Environment& env, const Weights& w, const std::vector<Trajectory>& members,
                                const PipelineConfig& cfg, std::uint64_t seed);

/// Statistics of a selected model; `epsilons` come from its score.
StrategyReport compute_metrics(const Environment& env, const ModelRun& run, const std::vector<Trajectory>& trajs,
                               const PipelineConfig& cfg);

/// Geometric-mean per-operation probability under the uniform-legal policy.
double random_likelihood_per_click(const Environment& env, const std::vector<Trajectory>& trajs);

std::string report_text(const StrategyReport& r);
nlohmann::json report_json(const StrategyReport& r);
/// strategies_<name>_<max>_<num_p>_<demos> under the output directory.
std::string report_basename(const PipelineConfig& cfg);
/// Write the text report, its .json sidecar and the _model_scores.tsv table.
/// Returns the text report path.
std::string write_report(const StrategyReport& r);

/// Thrown by parse_cli for --help; what() is the usage text.
class HelpRequested : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

std::string usage();
/// Parse command-line flags. Throws ConfigError carrying the usage text.
PipelineConfig parse_cli(int argc, const char* const* argv);

}  // namespace stratdisc
