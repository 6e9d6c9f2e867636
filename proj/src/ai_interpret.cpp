// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "stratdisc/errors.hpp"
#include "stratdisc/induction.hpp"
#include "stratdisc/kernels.hpp"

namespace stratdisc {
namespace {

constexpr std::size_t kMaxLinkagePoints = 600;

struct RowHash {
  std::size_t operator()(const std::vector<std::uint64_t>& v) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::uint64_t w : v) h = Rng::mix(h ^ w);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

double divergence(const Environment& env, const Policy& formula_policy, const Policy& cluster_policy,
                  double expert_reward, std::size_t num_rollouts, std::uint64_t seed) {
  if (expert_reward <= 0.0) throw ConfigError("expert reward must be positive");
  const double jf = estimate_expected_reward(env, formula_policy, num_rollouts, seed).mean;
  const double jc = estimate_expected_reward(env, cluster_policy, num_rollouts, seed).mean;
  return std::max(0.0, (jc - jf) / expert_reward);
}

std::vector<std::size_t> hamming_clusters(const std::vector<std::vector<std::uint64_t>>& rows,
                                          std::size_t k) {
  const std::size_t n = rows.size();
  if (n == 0) return {};
  k = std::max<std::size_t>(1, std::min(k, n));
  const auto& K = kernels::active();
  const std::size_t W = rows[0].size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d[i * n + j] = d[j * n + i] = static_cast<double>(K.xor_popcount(rows[i].data(), rows[j].data(), W));

  // average linkage with Lance-Williams updates; cluster c lives at index c
  std::vector<std::size_t> size(n, 1), owner(n);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) owner[i] = i;
  for (std::size_t clusters = n; clusters > k; --clusters) {
    double best = HUGE_VAL;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j)
        if (alive[j] && d[i * n + j] < best) {
          best = d[i * n + j];
          bi = i;
          bj = j;
        }
    }
    const double si = static_cast<double>(size[bi]), sj = static_cast<double>(size[bj]);
    for (std::size_t m = 0; m < n; ++m) {
      if (!alive[m] || m == bi || m == bj) continue;
      const double v = (si * d[bi * n + m] + sj * d[bj * n + m]) / (si + sj);
      d[bi * n + m] = d[m * n + bi] = v;
    }
    size[bi] += size[bj];
    alive[bj] = false;
    for (std::size_t& o : owner)
      if (o == bj) o = bi;
  }
  // relabel by first appearance
  std::unordered_map<std::size_t, std::size_t> label;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = label.find(owner[i]);
    if (it == label.end()) it = label.emplace(owner[i], label.size()).first;
    out[i] = it->second;
  }
  return out;
}

InterpretResult ai_interpret(const Environment& env, const dsl::Catalog& cat, const DemoSet& demos,
                             const Policy& cluster_policy, const InterpretConfig& cfg) {
  const ValuationMatrix vm(demos, cat);
  const std::size_t W = vm.words();
  const auto& K = kernels::active();
  RowSet pos(W, 0), neg(W, 0);
  std::vector<std::size_t> pos_rows;
  for (std::size_t r = 0; r < demos.rows.size(); ++r) {
    const auto& row = demos.rows[r];
    if (!row.positive) {
      neg[r / 64] |= std::uint64_t{1} << (r % 64);
    } else if (!row.implicit) {
      pos[r / 64] |= std::uint64_t{1} << (r % 64);
      pos_rows.push_back(r);
    }
  }
  if (pos_rows.empty()) {
    // every demonstration terminates at once: the empty disjunction says so
    InterpretResult res;
    const FormulaPolicy fp(res.dnf);
    res.divergence = divergence(env, fp, cluster_policy, cfg.expert_reward, cfg.num_rollouts, cfg.seed);
    res.coverage = 1.0;
    res.used_fraction = 1.0;
    res.attempts = 1;
    if (res.divergence > cfg.max_divergence) throw InductionFailed("no formula is close enough to the cluster policy");
    return res;
  }

  // Valuation rows of the positives, deduplicated.
  const std::size_t RW = (vm.cols() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> vrow(pos_rows.size(), std::vector<std::uint64_t>(RW, 0));
  for (std::size_t p = 0; p < vm.cols(); ++p) {
    const std::uint64_t* col = vm.column(p);
    for (std::size_t i = 0; i < pos_rows.size(); ++i) {
      const std::size_t r = pos_rows[i];
      if ((col[r / 64] >> (r % 64)) & 1U) vrow[i][p / 64] |= std::uint64_t{1} << (p % 64);
    }
  }
  std::unordered_map<std::vector<std::uint64_t>, std::size_t, RowHash> uniq_index;
  std::vector<std::vector<std::uint64_t>> uniq;
  std::vector<std::size_t> row_to_uniq(pos_rows.size());
  for (std::size_t i = 0; i < pos_rows.size(); ++i) {
    auto [it, fresh] = uniq_index.emplace(vrow[i], uniq.size());
    if (fresh) uniq.push_back(vrow[i]);
    row_to_uniq[i] = it->second;
  }

  std::vector<std::size_t> uniq_cluster(uniq.size(), 0);
  if (cfg.num_ai_clusters > 1 && uniq.size() > 1) {
    std::vector<std::size_t> sample(uniq.size());
    for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i;
    if (sample.size() > kMaxLinkagePoints) {
      Rng rng = Rng::stream(cfg.seed, 0x68616dULL);
      for (std::size_t i = 0; i < kMaxLinkagePoints; ++i)
        std::swap(sample[i], sample[i + rng.below(sample.size() - i)]);
      sample.resize(kMaxLinkagePoints);
      std::sort(sample.begin(), sample.end());
    }
    std::vector<std::vector<std::uint64_t>> pts;
    for (std::size_t s : sample) pts.push_back(uniq[s]);
    const auto lab = hamming_clusters(pts, cfg.num_ai_clusters);
    const std::size_t nc = *std::max_element(lab.begin(), lab.end()) + 1;
    std::vector<bool> in_sample(uniq.size(), false);
    for (std::size_t i = 0; i < sample.size(); ++i) {
      uniq_cluster[sample[i]] = lab[i];
      in_sample[sample[i]] = true;
    }
    // remaining rows join the cluster with the smallest mean distance
    std::vector<double> acc(nc);
    std::vector<double> cnt(nc, 0.0);
    for (std::size_t l : lab) cnt[l] += 1.0;
    for (std::size_t u = 0; u < uniq.size(); ++u) {
      if (in_sample[u]) continue;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t i = 0; i < pts.size(); ++i)
        acc[lab[i]] += static_cast<double>(K.xor_popcount(uniq[u].data(), pts[i].data(), RW));
      std::size_t best = 0;
      for (std::size_t c = 1; c < nc; ++c)
        if (acc[c] / cnt[c] < acc[best] / cnt[best]) best = c;
      uniq_cluster[u] = best;
    }
  }
  const std::size_t nc = *std::max_element(uniq_cluster.begin(), uniq_cluster.end()) + 1;
  std::vector<RowSet> cluster_rows(nc, RowSet(W, 0));
  std::vector<std::size_t> cluster_size(nc, 0);
  for (std::size_t i = 0; i < pos_rows.size(); ++i) {
    const std::size_t c = uniq_cluster[row_to_uniq[i]];
    cluster_rows[c][pos_rows[i] / 64] |= std::uint64_t{1} << (pos_rows[i] % 64);
    ++cluster_size[c];
  }

  // Drop order: clusters whose own best formula explains a row least well,
  // scaled by their share of the positives, go first.
  std::vector<double> keep_score(nc, -HUGE_VAL);
  if (nc > 1) {
    for (std::size_t c = 0; c < nc; ++c) {
      try {
        const auto lr = learn_dnf(vm, cat, cluster_rows[c], neg, cfg.learn);
        keep_score[c] = std::log(static_cast<double>(cluster_size[c]) / static_cast<double>(pos_rows.size())) +
                        lr.log_posterior / static_cast<double>(cluster_size[c]);
      } catch (const NoSeparator&) {
      }
    }
  }

  std::vector<std::size_t> retained(nc);
  for (std::size_t c = 0; c < nc; ++c) retained[c] = c;
  InterpretResult best_fail;
  std::size_t attempts = 0;
  while (!retained.empty()) {
    ++attempts;
    RowSet target(W, 0);
    std::size_t n_target = 0;
    for (std::size_t c : retained) {
      for (std::size_t w = 0; w < W; ++w) target[w] |= cluster_rows[c][w];
      n_target += cluster_size[c];
    }
    try {
      const auto lr = learn_dnf(vm, cat, target, neg, cfg.learn);
      InterpretResult res;
      res.indices = lr.dnf;
      res.dnf = to_dnf(lr.dnf, cat);
      res.log_posterior = lr.log_posterior;
      res.coverage = static_cast<double>(lr.covered) / static_cast<double>(n_target);
      res.used_fraction = static_cast<double>(n_target) / static_cast<double>(pos_rows.size());
      res.clusters_used = retained.size();
      res.attempts = attempts;
      if (res.coverage >= 1.0 - cfg.ai_tolerance) {
        const FormulaPolicy fp(res.dnf);
        res.divergence = divergence(env, fp, cluster_policy, cfg.expert_reward, cfg.num_rollouts, cfg.seed);
        if (res.divergence <= cfg.max_divergence) return res;
      }
    } catch (const NoSeparator&) {
    }
    auto worst = std::min_element(retained.begin(), retained.end(),
                                  [&](std::size_t a, std::size_t b) { return keep_score[a] < keep_score[b]; });
    retained.erase(worst);
  }
  throw InductionFailed("no formula describes any retained part of the demonstrations");
}

}  // namespace stratdisc
