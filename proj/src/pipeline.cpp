// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>

#include "stratdisc/errors.hpp"
#include "stratdisc/pipeline.hpp"
#include "stratdisc/rng.hpp"

namespace stratdisc {

void PipelineConfig::validate() const {
  if (experiment.empty()) throw ConfigError("experiment name is required");
  if (max_num_strategies < 1) throw ConfigError("max_num_strategies must be at least 1");
  if (begin < 1) throw ConfigError("begin must be at least 1");
  if (begin > max_num_strategies)
    throw ConfigError("begin (" + std::to_string(begin) + ") exceeds max_num_strategies (" +
                      std::to_string(max_num_strategies) + ")");
  if (!(expert_reward > 0.0)) throw ConfigError("expert_reward must be positive");
  if (num_demos < 1) throw ConfigError("num_demos must be at least 1");
  if (interpret_size < 1) throw ConfigError("interpret_size must be at least 1");
  if (!(ai_tolerance >= 0.0 && ai_tolerance < 1.0)) throw ConfigError("ai_tolerance must lie in [0, 1)");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  if (!(max_divergence >= 0.0)) throw ConfigError("max_divergence must be non-negative");
  if (!(argmax_tolerance >= 0.0)) throw ConfigError("argmax_tolerance must be non-negative");
  if (num_ai_clusters < 1) throw ConfigError("num_ai_clusters must be at least 1");
  if (eval_rollouts() < 1) throw ConfigError("num_eval_rollouts must be at least 1");
}

ClusterOutcome describe_cluster(const Environment& env, const Weights& w, const std::vector<Trajectory>& members,
                                const PipelineConfig& cfg, std::uint64_t seed) {
  ClusterOutcome out;
  out.weights = w;
  try {
    const DiscretizedPolicy policy(w, cfg.argmax_tolerance);
    const DemoSet demos = generate_demonstrations(env, policy, cfg.num_demos, seed);

    InterpretConfig ic;
    ic.learn.interpret_size = cfg.interpret_size;
    ic.ai_tolerance = cfg.ai_tolerance;
    ic.num_rollouts = cfg.num_rollouts;
    ic.num_ai_clusters = cfg.num_ai_clusters;
    ic.max_divergence = cfg.max_divergence;
    ic.expert_reward = cfg.expert_reward;
    ic.seed = seed;
    const auto& catalog = dsl::Catalog::standard();
    const InterpretResult ir = ai_interpret(env, catalog, demos, policy, ic);
    out.dnf = ir.dnf;
    out.divergence = ir.divergence;
    out.used_fraction = ir.used_fraction;

    static const auto allowed = dsl::allowed_condition_predicates();
    static const auto redundant = dsl::redundant_predicates(catalog);
    TransformConfig tc;
    tc.threshold = cfg.threshold;
    const TransformResult tr = dnf2ltl(env, ir.dnf, demos.trajectories, allowed, redundant, tc);
    out.formula = select_pruned(env, tr.class_formulas, members.empty() ? demos.trajectories : members);
    out.described = true;
  } catch (const Error& e) {
    out.described = false;
    out.failure = e.what();
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const Dataset& data, const ProgressFn& progress) {
  cfg.validate();
  if (!data.env) throw MissingData("dataset has no environment");
  const Environment& env = *data.env;
  const auto trajs = data.trajectories();
  if (trajs.empty()) throw MissingData("dataset has no trajectories");
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };

  const FeatureCache fc = build_feature_cache(env, trajs);
  PipelineResult result;
  std::vector<ModelScore> scores;
  for (std::size_t k = cfg.begin; k <= cfg.max_num_strategies; ++k) {
    if (k > trajs.size()) {
      note("skipping k=" + std::to_string(k) + ": more clusters than trajectories");
      continue;
    }
    ModelRun run;
    run.k = k;
    EmConfig ec;
    ec.k = k;
    ec.tolerance = cfg.tolerance;
    ec.change_tolerance = cfg.change_tolerance;
    ec.max_iterations = cfg.em_max_iterations;
    ec.restarts = cfg.em_restarts;
    ec.seed = cfg.seed;
    run.em = em_fit(fc, ec);
    const auto assign = run.em.assignments();

    bool all = true;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<std::size_t> idx;
      std::vector<Trajectory> members;
      for (std::size_t t = 0; t < assign.size(); ++t)
        if (assign[t] == i) {
          idx.push_back(t);
          members.push_back(trajs[t]);
        }
      const std::uint64_t seed = Rng::mix(cfg.seed ^ Rng::mix(0x636c7573ULL + k * 1024 + i));
      ClusterOutcome c;
      if (all) {
        c = describe_cluster(env, run.em.weights[i], members, cfg, seed);
      } else {
        c.weights = run.em.weights[i];
        c.failure = "skipped after an earlier cluster failed";
      }
      c.members = std::move(idx);
      all = all && c.described;
      note("k=" + std::to_string(k) + " cluster " + std::to_string(i) + ": " +
           (c.described ? to_string(c.formula) : "no description (" + c.failure + ")"));
      run.clusters.push_back(std::move(c));
    }

    if (all) {
      std::vector<LtlPolicy> policies;
      for (const auto& c : run.clusters) policies.emplace_back(c.formula);
      std::vector<std::vector<EpsilonStats>> stats(trajs.size(), std::vector<EpsilonStats>(k));
      for (std::size_t t = 0; t < trajs.size(); ++t)
        for (std::size_t i = 0; i < k; ++i) stats[t][i] = epsilon_stats(support_along(env, policies[i], trajs[t]));
      run.score = score_model(stats, true, fc.num_ops());
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      run.score.k = k;
      run.score.num_ops = fc.num_ops();
      run.score.log_likelihood = run.score.bic = run.score.aic = nan;
      run.score.log_marginal = run.score.beta_log_marginal = run.score.weighted_marginal = nan;
      run.score.admissible = false;
    }
    scores.push_back(run.score);
    result.runs.push_back(std::move(run));
  }

  const ModelScore& best = select_model(scores, cfg.criterion);
  const ModelRun* chosen = nullptr;
  for (const auto& r : result.runs)
    if (r.k == best.k) chosen = &r;
  note("selected k=" + std::to_string(best.k));
  result.report = compute_metrics(env, *chosen, trajs, cfg);
  result.report.scores = std::move(scores);
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const Dataset data = load_human_data(cfg.data_root, cfg.experiment, cfg.num_participants, cfg.block);
  return run_pipeline(cfg, data, progress);
}

}  // namespace stratdisc
