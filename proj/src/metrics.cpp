// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "stratdisc/pipeline.hpp"
#include "stratdisc/rng.hpp"
#include "stratdisc/verbalize.hpp"

namespace stratdisc {
namespace {

constexpr std::uint64_t kLtlRollouts = 0x6c746c;
constexpr std::uint64_t kSoftRollouts = 0x736f6674;

struct Fraction {
  double hit = 0.0, total = 0.0;
  void add(const SupportTrace& s) {
    for (auto in : s.in_support) hit += in;
    total += static_cast<double>(s.in_support.size());
  }
  double value() const { return total > 0.0 ? hit / total : 0.0; }
};

// Per-operation log-likelihood under the epsilon model, summed, plus the op count.
struct OpLikelihood {
  double log_sum = 0.0, ops = 0.0;
  void add(const SupportTrace& s, double eps) {
    log_sum += epsilon_log_likelihood(epsilon_stats(s), eps);
    ops += static_cast<double>(s.in_support.size());
  }
  double geometric_mean() const { return ops > 0.0 ? std::exp(log_sum / ops) : 0.0; }
};

double clamp01(double x) { return std::isfinite(x) ? std::clamp(x, 0.0, 1.0) : 0.0; }

ClusterStats cluster_stats(const Environment& env, const ClusterOutcome& c, double eps,
                           const std::vector<Trajectory>& trajs, std::size_t total, const PipelineConfig& cfg,
                           std::size_t index) {
  ClusterStats s;
  s.fr = total ? static_cast<double>(c.members.size()) / static_cast<double>(total) : 0.0;
  s.complexity = complexity(c.formula);
  const LtlPolicy ltl(c.formula);
  const DiscretizedPolicy argmax(c.weights, cfg.argmax_tolerance);
  const SoftmaxPolicy soft(c.weights);

  Fraction ltl_in_argmax, soft_in_ltl;
  OpLikelihood self;
  const std::size_t n = cfg.eval_rollouts();
  for (std::size_t i = 0; i < n; ++i) {
    Rng truth = Rng::stream(cfg.seed, kLtlRollouts ^ (index << 32), i);
    Rng act = Rng::stream(cfg.seed, kLtlRollouts + 1 + (index << 32), i);
    const auto r = rollout(env, ltl, truth, act);
    ltl_in_argmax.add(support_along(env, argmax, r.trajectory));
    self.add(support_along(env, ltl, r.trajectory), eps);

    Rng truth2 = Rng::stream(cfg.seed, kSoftRollouts ^ (index << 32), i);
    Rng act2 = Rng::stream(cfg.seed, kSoftRollouts + 1 + (index << 32), i);
    soft_in_ltl.add(support_along(env, ltl, rollout(env, soft, truth2, act2).trajectory));
  }
  s.fcf = 0.5 * (ltl_in_argmax.value() + soft_in_ltl.value());

  Fraction human;
  OpLikelihood members;
  for (auto t : c.members) {
    const auto tr = support_along(env, ltl, trajs[t]);
    human.add(tr);
    members.add(tr, eps);
  }
  s.fon = human.value();
  const double denom = self.geometric_mean();
  s.fpo = denom > 0.0 ? clamp01(members.geometric_mean() / denom) : 0.0;
  s.fcf = clamp01(s.fcf);
  return s;
}

}  // namespace

double random_likelihood_per_click(const Environment& env, const std::vector<Trajectory>& trajs) {
  double log_sum = 0.0, ops = 0.0;
  for (const auto& t : trajs)
    for (const auto& op : replay(env, t)) {
      log_sum -= std::log(static_cast<double>(std::popcount(op.belief.legal_mask())));
      ops += 1.0;
    }
  return ops > 0.0 ? std::exp(log_sum / ops) : 0.0;
}

StrategyReport compute_metrics(const Environment& env, const ModelRun& run, const std::vector<Trajectory>& trajs,
                               const PipelineConfig& cfg) {
  StrategyReport r;
  r.config = cfg;
  r.selected_k = run.k;
  r.num_trajectories = trajs.size();
  r.num_operations = run.score.num_ops;
  for (std::size_t i = 0; i < run.clusters.size(); ++i) {
    const double eps = i < run.score.epsilons.size() ? run.score.epsilons[i] : 0.0;
    r.cluster_stats.push_back(cluster_stats(env, run.clusters[i], eps, trajs, trajs.size(), cfg, i));
  }

  std::map<std::string, std::size_t> by_text;
  for (std::size_t i = 0; i < run.clusters.size(); ++i) {
    const std::string text = to_string(run.clusters[i].formula);
    auto [it, fresh] = by_text.emplace(text, r.strategies.size());
    if (fresh) {
      Strategy s;
      s.formula = text;
      s.description = translate(run.clusters[i].formula);
      s.complexity = r.cluster_stats[i].complexity;
      r.strategies.push_back(std::move(s));
    }
    r.strategies[it->second].clusters.push_back(i);
  }
  for (auto& s : r.strategies) {
    double w = 0.0;
    for (auto i : s.clusters) {
      const auto& c = r.cluster_stats[i];
      s.fr += c.fr;
      s.fcf += c.fcf;
      s.fon += c.fon;
      s.fpo += c.fpo;
      s.fcf_weighted += c.fr * c.fcf;
      s.fon_weighted += c.fr * c.fon;
      s.fpo_weighted += c.fr * c.fpo;
      w += c.fr;
    }
    s.n = s.clusters.size();
    const double n = static_cast<double>(s.n);
    s.fcf /= n;
    s.fon /= n;
    s.fpo /= n;
    if (w > 0.0) {
      s.fcf_weighted /= w;
      s.fon_weighted /= w;
      s.fpo_weighted /= w;
    } else {
      s.fcf_weighted = s.fcf;
      s.fon_weighted = s.fon;
      s.fpo_weighted = s.fpo;
    }
  }
  std::stable_sort(r.strategies.begin(), r.strategies.end(), [](const Strategy& a, const Strategy& b) {
    return a.fr != b.fr ? a.fr > b.fr : a.formula < b.formula;
  });

  const double ops = static_cast<double>(std::max<std::size_t>(run.score.num_ops, 1));
  r.likelihood_per_click = std::exp(run.score.log_likelihood / ops);
  r.random_likelihood_per_click = random_likelihood_per_click(env, trajs);
  r.times_better_than_random =
      r.random_likelihood_per_click > 0.0 ? r.likelihood_per_click / r.random_likelihood_per_click : 0.0;
  return r;
}

}  // namespace stratdisc
