// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <bit>
#include <cmath>

#include "stratdisc/clustering.hpp"

namespace stratdisc {
namespace {

enum Feature : std::size_t {
  kCountObservedNodeBranch,
  kDepthCount,
  kDepth,
  kLevelObservedStd,
  kHp0,
  kImmediateSuccessorCount,
  kIsLeaf,
  kIsPreviousMax,
  kIsRoot,
  kMostPromising,
  kObservedHeight,
  kParentObserved,
  kPreviousObservedSuccessor,
  kSecondMostPromising,
  kSiblingsCount,
  kSoftSatisficing,
  kSuccessorUncertainty,
  kTerminationConstant,
  kUncertainty,
};

constexpr double kTie = 1e-9;

// Belief-level quantities shared by all actions.
struct Context {
  const BeliefState& b;
  const TreeLayout& L;
  const RewardConfig& R;
  std::vector<double> path_value;
  std::vector<int> path_observed;
  double best = -HUGE_VAL;
  double second = -HUGE_VAL;
  bool has_second = false;
  std::vector<double> level_std;     // std of observed values per level
  std::vector<double> level_unc;     // summed prior std of unobserved nodes per level
  std::vector<int> level_count;      // observed nodes per level
  std::vector<int> height;           // consecutive observed run starting at a node
  bool prev_max = false;

  explicit Context(const BeliefState& belief)
      : b(belief), L(belief.env().layout()), R(belief.env().rewards()) {
    const std::size_t n = L.node_count();
    path_value.resize(L.paths.size());
    path_observed.resize(L.paths.size());
    for (std::size_t p = 0; p < L.paths.size(); ++p) {
      double v = 0.0;
      int o = 0;
      for (int m : L.paths[p]) {
        v += b.expected_value(m);
        o += b.observed(m) ? 1 : 0;
      }
      path_value[p] = v;
      path_observed[p] = o;
      best = std::max(best, v);
    }
    for (double v : path_value)
      if (v < best - kTie && (!has_second || v > second)) {
        second = v;
        has_second = true;
      }
    const std::size_t levels = static_cast<std::size_t>(L.max_level) + 1;
    level_std.assign(levels, 0.0);
    level_unc.assign(levels, 0.0);
    level_count.assign(levels, 0);
    std::vector<double> sum(levels, 0.0), sq(levels, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      const auto l = static_cast<std::size_t>(L.level[i]);
      const int id = static_cast<int>(i);
      if (b.observed(id)) {
        ++level_count[l];
        sum[l] += b.value(id);
        sq[l] += static_cast<double>(b.value(id)) * b.value(id);
      } else {
        level_unc[l] += R.stddev[l];
      }
    }
    for (std::size_t l = 1; l < levels; ++l)
      if (level_count[l] > 0) {
        const double m = sum[l] / level_count[l];
        level_std[l] = std::sqrt(std::max(0.0, sq[l] / level_count[l] - m * m));
      }
    height.assign(n, 0);
    for (std::size_t i = n; i-- > 1;) {
      const int id = static_cast<int>(i);
      if (!b.observed(id)) continue;
      int h = 0;
      for (int c : L.children[i]) h = std::max(h, height[static_cast<std::size_t>(c)]);
      height[i] = 1 + h;
    }
    if (const auto last = b.last_clicked()) prev_max = b.value(*last) == R.global_max;
  }
};

void fill(const Context& ctx, Computation c, double* f) {
  std::fill(f, f + kFeatureStride, 0.0);
  if (c == kTerminate) {
    f[kSoftSatisficing] = ctx.best;
    f[kTerminationConstant] = 0.0;
    return;
  }
  const auto& L = ctx.L;
  const auto& b = ctx.b;
  const auto i = static_cast<std::size_t>(c);
  const auto lvl = static_cast<std::size_t>(L.level[i]);

  int min_obs = INT32_MAX;
  double max_through = -HUGE_VAL;
  bool on_best = false, on_second = false;
  for (int p : L.paths_through[i]) {
    const auto pi = static_cast<std::size_t>(p);
    min_obs = std::min(min_obs, ctx.path_observed[pi]);
    max_through = std::max(max_through, ctx.path_value[pi]);
    if (ctx.path_value[pi] >= ctx.best - kTie) on_best = true;
    if (ctx.has_second && std::fabs(ctx.path_value[pi] - ctx.second) <= kTie) on_second = true;
  }
  f[kCountObservedNodeBranch] = min_obs;
  f[kDepthCount] = ctx.level_count[lvl];
  f[kDepth] = static_cast<double>(lvl);
  f[kLevelObservedStd] = ctx.level_std[lvl];
  f[kHp0] = max_through > 0.0 ? 1.0 : 0.0;
  int obs_children = 0, height = 0;
  double succ_unc = 0.0;
  for (int ch : L.children[i]) {
    if (b.observed(ch))
      ++obs_children;
    else
      succ_unc += ctx.R.stddev[static_cast<std::size_t>(L.level[static_cast<std::size_t>(ch)])];
    height = std::max(height, ctx.height[static_cast<std::size_t>(ch)]);
  }
  f[kImmediateSuccessorCount] = obs_children;
  f[kIsLeaf] = L.is_leaf(c) ? 1.0 : 0.0;
  f[kIsPreviousMax] = ctx.prev_max ? 1.0 : 0.0;
  f[kIsRoot] = lvl == 1 ? 1.0 : 0.0;
  f[kMostPromising] = on_best ? 1.0 : 0.0;
  f[kObservedHeight] = height;
  const int par = L.parent[i];
  f[kParentObserved] = par > 0 && b.observed(par) ? 1.0 : 0.0;
  const auto last = b.last_clicked();
  f[kPreviousObservedSuccessor] = last && *last == par ? 1.0 : 0.0;
  f[kSecondMostPromising] = on_second ? 1.0 : 0.0;
  f[kSiblingsCount] = std::popcount(L.siblings[i] & b.observed_mask());
  f[kSuccessorUncertainty] = succ_unc;
  f[kTerminationConstant] = -1.0;
  f[kUncertainty] = ctx.level_unc[lvl];
}

}  // namespace

const std::array<std::string_view, kNumFeatures>& feature_names() {
  static const std::array<std::string_view, kNumFeatures> names{
      "count_observed_node_branch",
      "depth_count",
      "depth",
      "get_level_observed_std",
      "hp_0",
      "immediate_successor_count",
      "is_leaf",
      "is_previous_max",
      "is_root",
      "most_promising",
      "observed_height",
      "parent_observed",
      "previous_observed_successor",
      "second_most_promising",
      "siblings_count",
      "soft_satisficing",
      "successor_uncertainty",
      "termination_constant",
      "uncertainty",
  };
  return names;
}

void legal_action_features(const BeliefState& b, FeatureBlock& out) {
  const Context ctx(b);
  out.actions = b.legal_actions();
  out.rows.resize(out.actions.size() * kFeatureStride);
  for (std::size_t r = 0; r < out.actions.size(); ++r)
    fill(ctx, out.actions[r], out.rows.data() + r * kFeatureStride);
}

void action_features(const BeliefState& b, Computation c, double* out) {
  const Context ctx(b);
  fill(ctx, c, out);
}

}  // namespace stratdisc
