// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratdisc/rng.hpp"

namespace stratdisc {

/// Node identifier. Node 0 is the start node; it carries no reward and is
/// never clickable, so computation 0 doubles as "terminate".
using NodeId = int;
using Computation = int;
inline constexpr Computation kTerminate = 0;
inline constexpr int kMaxNodes = 64;

using NodeMask = std::uint64_t;

inline constexpr NodeMask bit(int i) { return NodeMask{1} << i; }

/// Immutable tree topology with precomputed relations.
struct TreeLayout {
  std::vector<int> parent;                 // parent[0] == -1
  std::vector<std::vector<int>> children;  // ascending ids
  std::vector<int> level;                  // level[0] == 0
  std::vector<std::vector<int>> paths;     // start excluded, lexicographic order
  std::vector<std::vector<int>> paths_through;
  std::vector<NodeMask> ancestors;    // strict, start excluded
  std::vector<NodeMask> descendants;  // strict
  std::vector<NodeMask> leaf_descendants;
  std::vector<NodeMask> siblings;
  std::vector<NodeMask> level_nodes;  // indexed by level
  std::vector<int> branching;
  NodeMask node_mask = 0;  // every reward node
  NodeMask all_mask = 0;   // every computation including terminate
  NodeMask leaf_mask = 0;
  NodeMask root_mask = 0;  // level-1 nodes
  int max_level = 0;

  /// branching[i] is the number of children of each node on level i.
  static TreeLayout from_branching(const std::vector<int>& branching);

  std::size_t node_count() const { return parent.size(); }
  bool is_leaf(NodeId n) const { return n != 0 && children[n].empty(); }
  int root_of(NodeId n) const;
};

/// Per-level reward supports (uniform) and click cost.
struct RewardConfig {
  std::vector<std::vector<int>> support;  // indexed by level, level 0 empty
  double click_cost = 1.0;

  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<int> max_value;
  std::vector<int> min_value;
  int global_max = 0;
  int global_min = 0;

  void finalize();
};

/// A layout plus its reward configuration.
class Environment {
 public:
  Environment(TreeLayout layout, RewardConfig rewards);

  /// Three branches of 1 -> 2 -> 2 nodes, rewards {+-4,+-2}, {+-8,+-4}, {+-48,+-24}.
  static Environment standard();
  static Environment from_json(const nlohmann::json& j);
  static Environment load(const std::string& path);
  nlohmann::json to_json() const;

  const TreeLayout& layout() const { return *layout_; }
  const RewardConfig& rewards() const { return *rewards_; }
  std::size_t node_count() const { return layout_->node_count(); }

  std::vector<int> sample_ground_truth(Rng& rng) const;

 private:
  std::shared_ptr<const TreeLayout> layout_;
  std::shared_ptr<const RewardConfig> rewards_;
};

using GroundTruth = std::vector<int>;

/// Observed node values so far. The referenced environment must outlive it.
class BeliefState {
 public:
  explicit BeliefState(const Environment& env);

  const Environment& env() const { return *env_; }
  bool observed(NodeId n) const { return (mask_ & bit(n)) != 0; }
  int value(NodeId n) const { return values_[static_cast<std::size_t>(n)]; }
  NodeMask observed_mask() const { return mask_; }
  int clicks() const { return clicks_; }
  std::optional<NodeId> last_clicked() const {
    return last_ < 0 ? std::nullopt : std::optional<NodeId>(last_);
  }
  /// Observed value, or the level mean for unobserved nodes.
  double expected_value(NodeId n) const;
  /// Terminate plus every unobserved node, ascending.
  NodeMask legal_mask() const;
  std::vector<Computation> legal_actions() const;

  /// Reveal a node. Throws UnknownNode or AlreadyObserved.
  void reveal(NodeId n, int value);

  std::uint64_t fingerprint() const;
  bool operator==(const BeliefState& o) const;

 private:
  const Environment* env_;
  NodeMask mask_ = 0;
  int clicks_ = 0;
  int last_ = -1;
  std::array<int, kMaxNodes> values_{};
};

BeliefState click(const BeliefState& b, NodeId n, const GroundTruth& truth);

/// Max over root-to-leaf paths of the summed expected node values.
double termination_return(const BeliefState& b);

/// Path followed on termination: highest expected sum, ties broken by the
/// lexicographically smallest node-id sequence.
const std::vector<int>& termination_path(const BeliefState& b);

/// Probability of each legal action. Actions not listed have probability 0.
struct ActionDistribution {
  std::vector<Computation> actions;
  std::vector<double> probs;

  void clear() {
    actions.clear();
    probs.clear();
  }
  double prob_of(Computation a) const;
  Computation sample(Rng& rng) const;
};

/// Per-episode policy state.
class PolicyRun {
 public:
  virtual ~PolicyRun() = default;
  virtual void distribution(const BeliefState& b, ActionDistribution& out) = 0;
  /// Called after an action has been chosen in belief b.
  virtual void advance(const BeliefState& b, Computation a) {
    (void)b;
    (void)a;
  }
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::unique_ptr<PolicyRun> start() const = 0;
};

/// Policy whose distribution depends only on the current belief.
class StatelessPolicy : public Policy {
 public:
  virtual void distribution(const BeliefState& b, ActionDistribution& out) const = 0;
  std::unique_ptr<PolicyRun> start() const override;
};

/// Uniform over all legal actions.
class RandomPolicy : public StatelessPolicy {
 public:
  void distribution(const BeliefState& b, ActionDistribution& out) const override;
};

/// A ground truth and the clicks made before terminating.
struct Trajectory {
  GroundTruth truth;
  std::vector<NodeId> clicks;
};

/// One decision: the belief and the computation chosen in it.
struct Operation {
  BeliefState belief;
  Computation action;
};

/// Belief/action pairs of a trajectory with the final terminate appended.
/// Throws InconsistentReplay on clicks of start, unknown or repeated nodes.
std::vector<Operation> replay(const Environment& env, const Trajectory& t);

struct RolloutResult {
  Trajectory trajectory;
  double score = 0.0;
  std::vector<int> path;
};

/// Sample a ground truth from truth_rng and run the policy with action_rng.
RolloutResult rollout(const Environment& env, const Policy& policy, Rng& truth_rng,
                      Rng& action_rng);

/// Run the policy on a given ground truth.
RolloutResult rollout_on(const Environment& env, const Policy& policy, const GroundTruth& truth,
                         Rng& action_rng);

/// Net score of a finished trajectory.
double trajectory_score(const Environment& env, const Trajectory& t);

struct RewardEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

/// Monte Carlo estimate. Rollout i uses ground-truth stream (seed, i) so two
/// policies estimated with the same seed see the same environments. Each
/// rollout is scored by the expected return of its final belief.
RewardEstimate estimate_expected_reward(const Environment& env, const Policy& policy,
                                        std::size_t num_rollouts, std::uint64_t seed);

}  // namespace stratdisc
