// SPDX-License-Identifier: Apache-2.0
#include "stratdisc/env.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>

#include "stratdisc/errors.hpp"

namespace stratdisc {

TreeLayout TreeLayout::from_branching(const std::vector<int>& branching) {
  if (branching.empty()) throw ConfigError("branching must not be empty");
  TreeLayout t;
  t.branching = branching;
  t.parent.push_back(-1);
  t.level.push_back(0);
  t.children.emplace_back();
  // Depth-first numbering: a node's subtree occupies consecutive ids.
  std::function<void(int)> grow = [&](int node) {
    const int lvl = t.level[static_cast<std::size_t>(node)];
    if (lvl >= static_cast<int>(branching.size())) return;
    const int k = branching[static_cast<std::size_t>(lvl)];
    if (k <= 0) throw ConfigError("branching factors must be positive");
    for (int i = 0; i < k; ++i) {
      const int id = static_cast<int>(t.parent.size());
      if (id >= kMaxNodes) throw ConfigError("layout exceeds 64 nodes");
      t.parent.push_back(node);
      t.level.push_back(lvl + 1);
      t.children.emplace_back();
      t.children[static_cast<std::size_t>(node)].push_back(id);
      grow(id);
    }
  };
  grow(0);

  const std::size_t n = t.parent.size();
  t.max_level = static_cast<int>(branching.size());
  t.ancestors.assign(n, 0);
  t.descendants.assign(n, 0);
  t.leaf_descendants.assign(n, 0);
  t.siblings.assign(n, 0);
  t.level_nodes.assign(static_cast<std::size_t>(t.max_level) + 1, 0);
  t.paths_through.assign(n, {});
  t.all_mask = n == 64 ? ~NodeMask{0} : (bit(static_cast<int>(n)) - 1);
  t.node_mask = t.all_mask & ~bit(0);
  for (std::size_t i = 1; i < n; ++i) {
    const int id = static_cast<int>(i);
    t.level_nodes[static_cast<std::size_t>(t.level[i])] |= bit(id);
    if (t.level[i] == 1) t.root_mask |= bit(id);
    if (t.children[i].empty()) t.leaf_mask |= bit(id);
    for (int p = t.parent[i]; p > 0; p = t.parent[static_cast<std::size_t>(p)]) {
      t.ancestors[i] |= bit(p);
      t.descendants[static_cast<std::size_t>(p)] |= bit(id);
      if (t.children[i].empty()) t.leaf_descendants[static_cast<std::size_t>(p)] |= bit(id);
    }
    for (int s : t.children[static_cast<std::size_t>(t.parent[i])])
      if (s != id) t.siblings[i] |= bit(s);
  }
  std::vector<int> stack;
  std::function<void(int)> walk = [&](int node) {
    if (node != 0) stack.push_back(node);
    if (node != 0 && t.children[static_cast<std::size_t>(node)].empty()) {
      const int idx = static_cast<int>(t.paths.size());
      t.paths.push_back(stack);
      for (int m : stack) t.paths_through[static_cast<std::size_t>(m)].push_back(idx);
    }
    for (int c : t.children[static_cast<std::size_t>(node)]) walk(c);
    if (node != 0) stack.pop_back();
  };
  walk(0);
  return t;
}

int TreeLayout::root_of(NodeId n) const {
  if (n <= 0) return -1;
  while (level[static_cast<std::size_t>(n)] > 1) n = parent[static_cast<std::size_t>(n)];
  return n;
}

void RewardConfig::finalize() {
  const std::size_t levels = support.size();
  mean.assign(levels, 0.0);
  stddev.assign(levels, 0.0);
  max_value.assign(levels, 0);
  min_value.assign(levels, 0);
  bool first = true;
  for (std::size_t l = 1; l < levels; ++l) {
    const auto& s = support[l];
    if (s.empty()) throw ConfigError("empty reward support on level " + std::to_string(l));
    double m = 0.0;
    for (int v : s) m += v;
    m /= static_cast<double>(s.size());
    double var = 0.0;
    for (int v : s) var += (v - m) * (v - m);
    var /= static_cast<double>(s.size());
    mean[l] = m;
    stddev[l] = std::sqrt(var);
    max_value[l] = *std::max_element(s.begin(), s.end());
    min_value[l] = *std::min_element(s.begin(), s.end());
    if (first || max_value[l] > global_max) global_max = max_value[l];
    if (first || min_value[l] < global_min) global_min = min_value[l];
    first = false;
  }
}

Environment::Environment(TreeLayout layout, RewardConfig rewards) {
  if (rewards.support.size() != static_cast<std::size_t>(layout.max_level) + 1)
    throw ConfigError("reward supports must cover every level");
  if (rewards.click_cost < 0.0) throw ConfigError("click cost must be non-negative");
  rewards.finalize();
  layout_ = std::make_shared<const TreeLayout>(std::move(layout));
  rewards_ = std::make_shared<const RewardConfig>(std::move(rewards));
}

Environment Environment::standard() {
  RewardConfig r;
  r.support = {{}, {-4, -2, 2, 4}, {-8, -4, 4, 8}, {-48, -24, 24, 48}};
  r.click_cost = 1.0;
  return Environment(TreeLayout::from_branching({3, 1, 2}), std::move(r));
}

Environment Environment::from_json(const nlohmann::json& j) {
  try {
    const auto branching = j.at("branching").get<std::vector<int>>();
    RewardConfig r;
    r.support.assign(branching.size() + 1, {});
    const auto& rw = j.at("rewards");
    for (std::size_t l = 1; l <= branching.size(); ++l)
      r.support[l] = rw.at(std::to_string(l)).get<std::vector<int>>();
    r.click_cost = j.value("click_cost", 1.0);
    return Environment(TreeLayout::from_branching(branching), std::move(r));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad environment config: ") + e.what());
  }
}

Environment Environment::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open environment config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad environment config: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json Environment::to_json() const {
  nlohmann::json j;
  j["branching"] = layout_->branching;
  nlohmann::json rw = nlohmann::json::object();
  for (std::size_t l = 1; l < rewards_->support.size(); ++l)
    rw[std::to_string(l)] = rewards_->support[l];
  j["rewards"] = rw;
  j["click_cost"] = rewards_->click_cost;
  return j;
}

std::vector<int> Environment::sample_ground_truth(Rng& rng) const {
  std::vector<int> g(node_count(), 0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const auto& s = rewards_->support[static_cast<std::size_t>(layout_->level[i])];
    g[i] = s[rng.below(s.size())];
  }
  return g;
}

BeliefState::BeliefState(const Environment& env) : env_(&env) {}

double BeliefState::expected_value(NodeId n) const {
  if (n == 0) return 0.0;
  if (observed(n)) return values_[static_cast<std::size_t>(n)];
  return env_->rewards().mean[static_cast<std::size_t>(env_->layout().level[static_cast<std::size_t>(n)])];
}

NodeMask BeliefState::legal_mask() const {
  return (env_->layout().node_mask & ~mask_) | bit(kTerminate);
}

std::vector<Computation> BeliefState::legal_actions() const {
  std::vector<Computation> out;
  NodeMask m = legal_mask();
  while (m != 0) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

void BeliefState::reveal(NodeId n, int value) {
  if (n <= 0 || static_cast<std::size_t>(n) >= env_->node_count())
    throw UnknownNode("node " + std::to_string(n) + " is not clickable");
  if (observed(n)) throw AlreadyObserved("node " + std::to_string(n) + " already observed");
  mask_ |= bit(n);
  values_[static_cast<std::size_t>(n)] = value;
  ++clicks_;
  last_ = n;
}

std::uint64_t BeliefState::fingerprint() const {
  std::uint64_t h = Rng::mix(mask_ ^ (static_cast<std::uint64_t>(last_ + 1) << 58));
  NodeMask m = mask_;
  while (m != 0) {
    const int i = std::countr_zero(m);
    m &= m - 1;
    h = Rng::mix(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(values_[static_cast<std::size_t>(i)])) +
                      (static_cast<std::uint64_t>(i) << 32)));
  }
  return h;
}

bool BeliefState::operator==(const BeliefState& o) const {
  if (env_ != o.env_ || mask_ != o.mask_ || last_ != o.last_ || clicks_ != o.clicks_) return false;
  NodeMask m = mask_;
  while (m != 0) {
    const int i = std::countr_zero(m);
    m &= m - 1;
    if (values_[static_cast<std::size_t>(i)] != o.values_[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

BeliefState click(const BeliefState& b, NodeId n, const GroundTruth& truth) {
  BeliefState next = b;
  if (n <= 0 || static_cast<std::size_t>(n) >= truth.size())
    throw UnknownNode("node " + std::to_string(n) + " is not clickable");
  next.reveal(n, truth[static_cast<std::size_t>(n)]);
  return next;
}

namespace {

std::size_t best_path_index(const BeliefState& b, double* value) {
  const auto& lay = b.env().layout();
  std::size_t best = 0;
  double best_v = -HUGE_VAL;
  for (std::size_t p = 0; p < lay.paths.size(); ++p) {
    double v = 0.0;
    for (int n : lay.paths[p]) v += b.expected_value(n);
    if (v > best_v + 1e-9) {
      best_v = v;
      best = p;
    }
  }
  if (value != nullptr) *value = best_v;
  return best;
}

}  // namespace

double termination_return(const BeliefState& b) {
  double v = 0.0;
  best_path_index(b, &v);
  return v;
}

const std::vector<int>& termination_path(const BeliefState& b) {
  return b.env().layout().paths[best_path_index(b, nullptr)];
}

double ActionDistribution::prob_of(Computation a) const {
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i] == a) return probs[i];
  return 0.0;
}

Computation ActionDistribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  Computation last = kTerminate;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = actions[i];
    if (u < acc) return actions[i];
  }
  return last;
}

namespace {

class StatelessRun : public PolicyRun {
 public:
  explicit StatelessRun(const StatelessPolicy& p) : p_(p) {}
  void distribution(const BeliefState& b, ActionDistribution& out) override {
    p_.distribution(b, out);
  }

 private:
  const StatelessPolicy& p_;
};

}  // namespace

std::unique_ptr<PolicyRun> StatelessPolicy::start() const {
  return std::make_unique<StatelessRun>(*this);
}

void RandomPolicy::distribution(const BeliefState& b, ActionDistribution& out) const {
  out.actions = b.legal_actions();
  out.probs.assign(out.actions.size(), 1.0 / static_cast<double>(out.actions.size()));
}

std::vector<Operation> replay(const Environment& env, const Trajectory& t) {
  if (t.truth.size() != env.node_count())
    throw InconsistentReplay("ground truth length does not match the layout");
  std::vector<Operation> ops;
  ops.reserve(t.clicks.size() + 1);
  BeliefState b(env);
  for (NodeId c : t.clicks) {
    if (c <= 0 || static_cast<std::size_t>(c) >= env.node_count())
      throw InconsistentReplay("click on non-clickable node " + std::to_string(c));
    if (b.observed(c)) throw InconsistentReplay("repeated click on node " + std::to_string(c));
    ops.push_back({b, c});
    b.reveal(c, t.truth[static_cast<std::size_t>(c)]);
  }
  ops.push_back({b, kTerminate});
  return ops;
}

double trajectory_score(const Environment& env, const Trajectory& t) {
  BeliefState b(env);
  for (NodeId c : t.clicks) b.reveal(c, t.truth[static_cast<std::size_t>(c)]);
  double s = 0.0;
  for (int n : termination_path(b)) s += t.truth[static_cast<std::size_t>(n)];
  return s - env.rewards().click_cost * static_cast<double>(t.clicks.size());
}

RolloutResult rollout_on(const Environment& env, const Policy& policy, const GroundTruth& truth,
                         Rng& action_rng) {
  RolloutResult r;
  r.trajectory.truth = truth;
  BeliefState b(env);
  auto run = policy.start();
  ActionDistribution dist;
  const std::size_t limit = env.node_count() + 1;
  for (std::size_t step = 0;; ++step) {
    if (step > limit) throw NonterminatingPolicy("policy exceeded the step limit");
    dist.clear();
    run->distribution(b, dist);
    const Computation a = dist.sample(action_rng);
    run->advance(b, a);
    if (a == kTerminate) break;
    if (b.observed(a)) throw NonterminatingPolicy("policy selected an observed node");
    b.reveal(a, truth[static_cast<std::size_t>(a)]);
    r.trajectory.clicks.push_back(a);
  }
  r.path = termination_path(b);
  double s = 0.0;
  for (int n : r.path) s += truth[static_cast<std::size_t>(n)];
  r.score = s - env.rewards().click_cost * static_cast<double>(r.trajectory.clicks.size());
  return r;
}

RolloutResult rollout(const Environment& env, const Policy& policy, Rng& truth_rng,
                      Rng& action_rng) {
  return rollout_on(env, policy, env.sample_ground_truth(truth_rng), action_rng);
}

RewardEstimate estimate_expected_reward(const Environment& env, const Policy& policy,
                                        std::size_t num_rollouts, std::uint64_t seed) {
  RewardEstimate e;
  if (num_rollouts == 0) return e;
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < num_rollouts; ++i) {
    Rng truth_rng = Rng::stream(seed, 0x7472757468ULL, i);
    Rng action_rng = Rng::stream(seed, 0x616374ULL, i);
    // Score with the expected return of the final belief instead of the
    // sampled path rewards: same mean, less variance.
    const auto r = rollout(env, policy, truth_rng, action_rng);
    BeliefState b(env);
    for (NodeId n : r.trajectory.clicks) b = click(b, n, r.trajectory.truth);
    const double s = termination_return(b) - env.rewards().click_cost * static_cast<double>(r.trajectory.clicks.size());
    sum += s;
    sq += s * s;
  }
  const double n = static_cast<double>(num_rollouts);
  e.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sq - n * e.mean * e.mean) / (n - 1)) : 0.0;
  e.stderr_mean = std::sqrt(var / n);
  return e;
}

}  // namespace stratdisc
