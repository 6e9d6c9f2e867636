// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stratdisc/env.hpp"

namespace stratdisc {

inline constexpr std::size_t kNumFeatures = 19;
/// Row stride of feature matrices; one zero pad column.
inline constexpr std::size_t kFeatureStride = 20;

using Weights = std::array<double, kFeatureStride>;

const std::array<std::string_view, kNumFeatures>& feature_names();

/// Feature rows for every legal action of a belief, ascending by action.
struct FeatureBlock {
  std::vector<Computation> actions;
  std::vector<double> rows;  // actions.size() x kFeatureStride
};

void legal_action_features(const BeliefState& b, FeatureBlock& out);
/// Features of one computation; out holds kFeatureStride values.
void action_features(const BeliefState& b, Computation c, double* out);

/// Softmax over legal actions of f(b, a) . w
class SoftmaxPolicy : public StatelessPolicy {
 public:
  explicit SoftmaxPolicy(const Weights& w) : w_(w) {}
  void distribution(const BeliefState& b, ActionDistribution& out) const override;
  const Weights& weights() const { return w_; }

 private:
  Weights w_;
};

/// Uniform over the maximizers of f(b, a) . w. Actions whose logit is
/// within `tie` of the maximum count as maximizers too.
class DiscretizedPolicy : public StatelessPolicy {
 public:
  explicit DiscretizedPolicy(const Weights& w, double tie = 0.0) : w_(w), tie_(tie) {}
  void distribution(const BeliefState& b, ActionDistribution& out) const override;
  const Weights& weights() const { return w_; }
  double tie() const { return tie_; }

 private:
  Weights w_;
  double tie_;
};

double softmax_prob(const Weights& w, const BeliefState& b, Computation a);
DiscretizedPolicy discretize(const Weights& w);

/// Precomputed feature rows of every operation of a set of trajectories.
struct FeatureCache {
  struct Op {
    std::size_t row_begin;
    std::size_t num_rows;
    std::size_t chosen;  // index within the op's rows
  };
  std::vector<double> rows;  // total rows x kFeatureStride
  std::vector<Op> ops;
  std::vector<std::size_t> traj_begin;  // ops of trajectory t: [traj_begin[t], traj_begin[t+1])

  std::size_t num_trajectories() const { return traj_begin.empty() ? 0 : traj_begin.size() - 1; }
  std::size_t num_ops() const { return ops.size(); }
};

FeatureCache build_feature_cache(const Environment& env, const std::vector<Trajectory>& trajs);

/// Sum over operations of log softmax probability of the chosen action.
double trajectory_log_likelihood(const FeatureCache& fc, std::size_t t, const Weights& w);

struct EmConfig {
  std::size_t k = 1;
  double tolerance = 1e-4;
  double change_tolerance = 1e-5;
  std::size_t max_iterations = 200;
  std::size_t restarts = 5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

struct EmResult {
  std::vector<Weights> weights;
  std::vector<std::vector<double>> responsibilities;  // trajectory x cluster
  std::vector<double> history;  // penalized objective after init and each iteration
  double log_likelihood = 0.0;  // unpenalized mixture log-likelihood
  double objective = 0.0;       // log-likelihood minus the L2 penalty
  std::size_t iterations = 0;
  std::size_t degenerate_restarts = 0;
  std::size_t best_restart = 0;

  std::vector<std::size_t> assignments() const;
};

/// Mixture of softmax policies with uniform 1/K weights. Each restart is
/// seeded k-means++ style on per-trajectory mean chosen-action features.
EmResult em_fit(const FeatureCache& fc, const EmConfig& cfg);

/// sum_t log sum_i (1/K) prod_ops pi_i
double mixture_log_likelihood(const FeatureCache& fc, const std::vector<Weights>& w);

/// Responsibility-weighted penalized log-likelihood of one cluster and its gradient.
double cluster_objective(const FeatureCache& fc, const std::vector<double>& resp, const Weights& w,
                         double l2, Weights* grad);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

enum class Criterion { bic, aic, marginal, weighted_marginal };

std::optional<Criterion> criterion_from_string(std::string_view s);
std::string_view to_string(Criterion c);

/// Per-operation support of a policy replayed along a trajectory.
struct SupportTrace {
  std::vector<std::uint8_t> in_support;
  std::vector<int> support_size;
  std::vector<int> legal_size;
};

SupportTrace support_along(const Environment& env, const Policy& policy, const Trajectory& t);

/// Sufficient statistics of a trajectory under an epsilon-error model.
struct EpsilonStats {
  double n_allowed = 0.0;    // ops in support with a non-empty complement
  double n_disallowed = 0.0;
  double log_base = 0.0;     // sum of -log|support| or -log|complement|
};

EpsilonStats epsilon_stats(const SupportTrace& s);
double epsilon_log_likelihood(const EpsilonStats& s, double eps);
/// log of the integral of eps^d (1-eps)^a against Beta(alpha, beta), closed form.
double log_beta_marginal(double d, double a, double alpha = 1.0, double beta = 1.0);
/// Same integral by adaptive Gauss-Kronrod quadrature.
double log_beta_marginal_quadrature(double d, double a, double alpha = 1.0, double beta = 1.0);

struct ModelScore {
  std::size_t k = 0;
  double log_likelihood = 0.0;
  double bic = 0.0;
  double aic = 0.0;
  double log_marginal = 0.0;        // BIC approximation, -bic / 2
  // Trajectories hard-assigned to their most responsible cluster, each at
  // probability 1/k, with epsilon integrated out exactly under Beta(1, 1).
  double beta_log_marginal = 0.0;
  double weighted_marginal = 0.0;   // Beta marginals weighted by cluster size
  std::vector<double> epsilons;
  std::size_t num_params = 0;
  std::size_t num_ops = 0;
  bool admissible = false;
};

/// Fit the epsilon mixture sum_i (1/K) prod_ops (eps_i * uniform(disallowed)
/// + (1 - eps_i) * uniform(allowed)) for one model. stats[t][i] holds the
/// statistics of trajectory t under cluster i's description.
ModelScore score_model(const std::vector<std::vector<EpsilonStats>>& stats, bool admissible,
                       std::size_t num_ops);

/// Best admissible model under the criterion. Throws NoAdmissibleModel.
const ModelScore& select_model(const std::vector<ModelScore>& scores, Criterion c);

std::string scores_tsv(const std::vector<ModelScore>& scores);

}  // namespace stratdisc
