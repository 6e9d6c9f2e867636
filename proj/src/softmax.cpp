// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>

#include "stratdisc/clustering.hpp"
#include "stratdisc/kernels.hpp"

namespace stratdisc {
namespace {

void logits(const FeatureBlock& fb, const Weights& w, std::vector<double>& out) {
  out.resize(fb.actions.size());
  kernels::active().gemv(fb.rows.data(), fb.actions.size(), kFeatureStride, w.data(), out.data());
}

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
}

}  // namespace

void SoftmaxPolicy::distribution(const BeliefState& b, ActionDistribution& out) const {
  thread_local FeatureBlock fb;
  legal_action_features(b, fb);
  logits(fb, w_, out.probs);
  softmax_inplace(out.probs);
  out.actions = fb.actions;
}

void DiscretizedPolicy::distribution(const BeliefState& b, ActionDistribution& out) const {
  thread_local FeatureBlock fb;
  thread_local std::vector<double> z;
  legal_action_features(b, fb);
  logits(fb, w_, z);
  const double m = *std::max_element(z.begin(), z.end());
  const double tol = std::max(tie_, 1e-9 * std::max(1.0, std::fabs(m)));
  out.actions.clear();
  out.probs.clear();
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] >= m - tol) out.actions.push_back(fb.actions[i]);
  out.probs.assign(out.actions.size(), 1.0 / static_cast<double>(out.actions.size()));
}

double softmax_prob(const Weights& w, const BeliefState& b, Computation a) {
  ActionDistribution d;
  SoftmaxPolicy(w).distribution(b, d);
  return d.prob_of(a);
}

DiscretizedPolicy discretize(const Weights& w) { return DiscretizedPolicy(w); }

FeatureCache build_feature_cache(const Environment& env, const std::vector<Trajectory>& trajs) {
  FeatureCache fc;
  FeatureBlock fb;
  fc.traj_begin.push_back(0);
  for (const auto& t : trajs) {
    for (const auto& op : replay(env, t)) {
      legal_action_features(op.belief, fb);
      FeatureCache::Op o;
      o.row_begin = fc.rows.size() / kFeatureStride;
      o.num_rows = fb.actions.size();
      o.chosen = static_cast<std::size_t>(
          std::find(fb.actions.begin(), fb.actions.end(), op.action) - fb.actions.begin());
      fc.rows.insert(fc.rows.end(), fb.rows.begin(), fb.rows.end());
      fc.ops.push_back(o);
    }
    fc.traj_begin.push_back(fc.ops.size());
  }
  return fc;
}

double trajectory_log_likelihood(const FeatureCache& fc, std::size_t t, const Weights& w) {
  const auto& K = kernels::active();
  thread_local std::vector<double> z;
  double ll = 0.0;
  for (std::size_t o = fc.traj_begin[t]; o < fc.traj_begin[t + 1]; ++o) {
    const auto& op = fc.ops[o];
    z.resize(op.num_rows);
    K.gemv(fc.rows.data() + op.row_begin * kFeatureStride, op.num_rows, kFeatureStride, w.data(),
           z.data());
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    ll += z[op.chosen] - m - std::log(s);
  }
  return ll;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, double> nij;
  std::map<int, double> ai, bj;
  for (std::size_t i = 0; i < n; ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  for (auto& [k, v] : nij) sum_ij += c2(v);
  for (auto& [k, v] : ai) sum_a += c2(v);
  for (auto& [k, v] : bj) sum_b += c2(v);
  const double total = c2(static_cast<double>(n));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

}  // namespace stratdisc
