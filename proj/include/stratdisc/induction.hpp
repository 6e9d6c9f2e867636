// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "stratdisc/dsl.hpp"
#include "stratdisc/env.hpp"

namespace stratdisc {

/// Conjunction of catalog predicates. Empty means TRUE; is_false marks the
/// unsatisfiable conjunction.
struct Conjunction {
  std::vector<dsl::ExprPtr> preds;
  bool is_false = false;

  bool is_true() const { return preds.empty() && !is_false; }
  bool operator==(const Conjunction& o) const;
};

/// Disjunction of conjunctions. No conjunctions means FALSE.
struct Dnf {
  std::vector<Conjunction> conjunctions;
};

std::string to_string(const Conjunction& c);
std::string to_string(const Dnf& d);
NodeMask eval_mask(const Conjunction& c, const dsl::StateContext& ctx);
NodeMask eval_mask(const Dnf& d, const dsl::StateContext& ctx);
bool equivalent_modulo_order(const Conjunction& a, const Conjunction& b);

nlohmann::json to_json(const Dnf& d);
Dnf dnf_from_json(const nlohmann::json& j);

/// Uniform over legal actions satisfying the formula; terminate when none do.
class FormulaPolicy : public StatelessPolicy {
 public:
  explicit FormulaPolicy(Dnf f) : f_(std::move(f)) {}
  void distribution(const BeliefState& b, ActionDistribution& out) const override;
  const Dnf& formula() const { return f_; }

 private:
  Dnf f_;
};

/// Rollouts of a cluster policy turned into labelled (state, action) rows.
struct DemoSet {
  struct Row {
    std::size_t state;
    Computation action;
    bool positive;
    /// Positive terminate row in a state whose only optimal action is to
    /// terminate. Such rows are explained by rejecting every node there.
    bool implicit;
  };
  std::vector<BeliefState> states;  // distinct beliefs
  std::vector<Row> rows;
  std::vector<Trajectory> trajectories;
};

/// num_demos rollouts of the policy. Positives are the chosen actions,
/// negatives every legal action outside the policy's support in each
/// visited state, subsampled to at most neg_cap times the positives.
DemoSet generate_demonstrations(const Environment& env, const Policy& policy,
                                std::size_t num_demos, std::uint64_t seed,
                                double neg_cap = 10.0);

/// Column-major bit matrix: column p holds predicate p evaluated on every row.
class ValuationMatrix {
 public:
  ValuationMatrix() = default;
  ValuationMatrix(const DemoSet& demos, const dsl::Catalog& catalog);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words() const { return words_; }
  const std::uint64_t* column(std::size_t p) const { return bits_.data() + p * words_; }
  bool get(std::size_t row, std::size_t p) const {
    return (column(p)[row / 64] >> (row % 64)) & 1U;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0, words_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Row subset as a bitset over matrix rows.
using RowSet = std::vector<std::uint64_t>;

struct LearnConfig {
  std::size_t interpret_size = 5;    // max predicates per conjunction
  std::size_t max_conjunctions = 4;
  double log_miss = -6.907755278982137;  // log(1e-3) per uncovered positive
  std::size_t exhaustive_limit = 400;    // full pair search below this catalog size
  std::size_t pair_pool = 1500;
};

/// A DNF over catalog columns.
struct DnfIndices {
  std::vector<std::vector<std::size_t>> conjunctions;
};

struct LearnResult {
  DnfIndices dnf;
  double log_posterior = 0.0;
  std::size_t covered = 0;
  std::size_t positives = 0;
};

/// log prior of the predicates plus log_miss per uncovered positive. Returns
/// -inf when a negative is accepted.
double dnf_log_posterior(const DnfIndices& f, const ValuationMatrix& vm, const dsl::Catalog& cat,
                         const RowSet& pos, const RowSet& neg, const LearnConfig& cfg);

/// Greedy MAP search for a DNF accepting the positives and rejecting every
/// negative. Throws NoSeparator when no predicate combination covers any
/// positive without accepting a negative.
LearnResult learn_dnf(const ValuationMatrix& vm, const dsl::Catalog& cat, const RowSet& pos,
                      const RowSet& neg, const LearnConfig& cfg);

Dnf to_dnf(const DnfIndices& f, const dsl::Catalog& cat);

/// (J(cluster) - J(formula)) / expert_reward, clamped below at 0. Both
/// returns use the same ground-truth and action streams.
double divergence(const Environment& env, const Policy& formula_policy, const Policy& cluster_policy,
                  double expert_reward, std::size_t num_rollouts, std::uint64_t seed);

struct InterpretConfig {
  LearnConfig learn;
  double ai_tolerance = 0.025;
  std::size_t num_rollouts = 10000;
  std::size_t num_ai_clusters = 4;
  double max_divergence = 0.2;
  double expert_reward = 39.97;
  std::uint64_t seed = 0;
};

struct InterpretResult {
  Dnf dnf;
  DnfIndices indices;
  double divergence = 0.0;
  double coverage = 0.0;       // of retained positives
  double used_fraction = 0.0;  // retained positives / all positives
  double log_posterior = 0.0;
  std::size_t clusters_used = 0;
  std::size_t attempts = 0;
};

/// Cluster the positive rows by Hamming distance of their valuations and
/// drop clusters until a formula fits the rest. Throws InductionFailed.
InterpretResult ai_interpret(const Environment& env, const dsl::Catalog& cat, const DemoSet& demos,
                             const Policy& cluster_policy, const InterpretConfig& cfg);

/// Average-linkage agglomerative clustering of weighted bit rows by Hamming
/// distance into at most k clusters. Returns a cluster id per row.
std::vector<std::size_t> hamming_clusters(const std::vector<std::vector<std::uint64_t>>& rows,
                                          std::size_t k);

}  // namespace stratdisc
