// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "stratdisc/errors.hpp"
#include "stratdisc/induction.hpp"
#include "stratdisc/kernels.hpp"

namespace stratdisc {
namespace {

constexpr double kTie = 1e-9;

struct Candidate {
  std::vector<std::size_t> preds;
  double score = -HUGE_VAL;
  std::size_t covered = 0;
};

std::string conj_text(const std::vector<std::size_t>& c, const dsl::Catalog& cat) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " and " : "") + cat[c[i]].text;
  return s;
}

std::string dnf_text(const DnfIndices& f, const dsl::Catalog& cat) {
  std::string s;
  for (std::size_t i = 0; i < f.conjunctions.size(); ++i)
    s += (i ? " or " : "") + conj_text(f.conjunctions[i], cat);
  return s;
}

// Rows accepted by a conjunction, restricted to `within`.
RowSet cover(const std::vector<std::size_t>& conj, const ValuationMatrix& vm, const RowSet& within) {
  RowSet out = within;
  const auto& K = kernels::active();
  for (std::size_t p : conj) K.and_into(out.data(), out.data(), vm.column(p), vm.words());
  return out;
}

double conj_log_prior(const std::vector<std::size_t>& c, const dsl::Catalog& cat) {
  double s = 0.0;
  for (std::size_t p : c) s += cat[p].log_prior;
  return s;
}

}  // namespace

double dnf_log_posterior(const DnfIndices& f, const ValuationMatrix& vm, const dsl::Catalog& cat,
                         const RowSet& pos, const RowSet& neg, const LearnConfig& cfg) {
  const auto& K = kernels::active();
  RowSet covered(vm.words(), 0);
  double lp = 0.0;
  for (const auto& c : f.conjunctions) {
    if (K.popcount(cover(c, vm, neg).data(), vm.words()) != 0) return -HUGE_VAL;
    const RowSet cp = cover(c, vm, pos);
    for (std::size_t w = 0; w < covered.size(); ++w) covered[w] |= cp[w];
    lp += conj_log_prior(c, cat);
  }
  const std::size_t total = K.popcount(pos.data(), vm.words());
  const std::size_t hit = K.popcount(covered.data(), vm.words());
  return lp + cfg.log_miss * static_cast<double>(total - hit);
}

LearnResult learn_dnf(const ValuationMatrix& vm, const dsl::Catalog& cat, const RowSet& pos,
                      const RowSet& neg, const LearnConfig& cfg) {
  const auto& K = kernels::active();
  const std::size_t W = vm.words();
  const std::size_t P = K.popcount(pos.data(), W);
  const std::size_t n_cols = std::min(vm.cols(), cat.size());

  std::vector<std::size_t> pos_cov(n_cols), neg_cov(n_cols);
  for (std::size_t p = 0; p < n_cols; ++p) {
    pos_cov[p] = K.and_popcount(vm.column(p), pos.data(), W);
    neg_cov[p] = K.and_popcount(vm.column(p), neg.data(), W);
  }

  auto better = [&](double s, const std::string& text, double best, const std::string& best_text) {
    return s > best + kTie || (s > best - kTie && text < best_text);
  };

  // Phase 1: best single conjunction of at most two predicates.
  Candidate one;
  bool have_one = false;
  std::string one_text;
  auto offer = [&](std::vector<std::size_t> c, std::size_t covered) {
    const double s = conj_log_prior(c, cat) + cfg.log_miss * static_cast<double>(P - covered);
    if (covered == 0 || s < one.score - kTie) return;
    const std::string t = conj_text(c, cat);
    if (!have_one || better(s, t, one.score, one_text)) {
      one = {std::move(c), s, covered};
      one_text = t;
      have_one = true;
    }
  };
  // with nothing to reject the empty conjunction (TRUE) is free and covers all
  if (K.popcount(neg.data(), W) == 0 && P > 0) offer({}, P);
  for (std::size_t p = 0; p < n_cols; ++p)
    if (neg_cov[p] == 0 && pos_cov[p] > 0) offer({p}, pos_cov[p]);

  if (cfg.interpret_size >= 2 && P > 0) {
    std::vector<std::size_t> pool;
    if (n_cols <= cfg.exhaustive_limit) {
      pool.resize(n_cols);
      std::iota(pool.begin(), pool.end(), 0);
    } else {
      for (std::size_t p = 0; p < n_cols; ++p)
        if (2 * pos_cov[p] >= P && neg_cov[p] > 0) pool.push_back(p);
      std::stable_sort(pool.begin(), pool.end(),
                       [&](std::size_t a, std::size_t b) { return cat[a].log_prior > cat[b].log_prior; });
      if (pool.size() > cfg.pair_pool) pool.resize(cfg.pair_pool);
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const std::size_t p = pool[i];
      if (pos_cov[p] == 0) continue;
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        const std::size_t q = pool[j];
        // a pair with a separating member is dominated by that member alone
        if (neg_cov[p] == 0 || neg_cov[q] == 0) continue;
        const double bound = cat[p].log_prior + cat[q].log_prior +
                             cfg.log_miss * static_cast<double>(P - std::min(pos_cov[p], pos_cov[q]));
        if (have_one && bound < one.score - kTie) continue;
        if (K.and3_popcount(vm.column(p), vm.column(q), neg.data(), W) != 0) continue;
        const std::size_t c = K.and3_popcount(vm.column(p), vm.column(q), pos.data(), W);
        offer(p < q ? std::vector<std::size_t>{p, q} : std::vector<std::size_t>{q, p}, c);
      }
    }
  }

  // Phase 2: sequential covering, each conjunction grown by FOIL gain.
  DnfIndices greedy;
  RowSet remaining = pos;
  for (std::size_t round = 0; round < cfg.max_conjunctions; ++round) {
    std::size_t rem = K.popcount(remaining.data(), W);
    if (rem == 0) break;
    std::vector<std::size_t> conj;
    RowSet cp = remaining, cn = neg;
    std::size_t p0 = rem, n0 = K.popcount(cn.data(), W);
    while (n0 > 0 && conj.size() < cfg.interpret_size) {
      double best_gain = -HUGE_VAL;
      std::size_t best = n_cols;
      std::size_t bp = 0, bn = 0;
      const double base = std::log(static_cast<double>(p0) / static_cast<double>(p0 + n0));
      for (std::size_t p = 0; p < n_cols; ++p) {
        if (pos_cov[p] == 0) continue;
        const std::size_t p1 = K.and_popcount(vm.column(p), cp.data(), W);
        if (p1 == 0) continue;
        const std::size_t n1 = neg_cov[p] == 0 ? 0 : K.and_popcount(vm.column(p), cn.data(), W);
        if (n1 == n0 && p1 == p0) continue;  // no progress
        const double gain = static_cast<double>(p1) *
                                (std::log(static_cast<double>(p1) / static_cast<double>(p1 + n1)) - base) +
                            cat[p].log_prior;
        if (gain > best_gain + kTie || (gain > best_gain - kTie && best < n_cols && cat[p].text < cat[best].text)) {
          best_gain = gain;
          best = p;
          bp = p1;
          bn = n1;
        }
      }
      if (best == n_cols) break;
      conj.push_back(best);
      K.and_into(cp.data(), cp.data(), vm.column(best), W);
      K.and_into(cn.data(), cn.data(), vm.column(best), W);
      p0 = bp;
      n0 = bn;
    }
    if (n0 > 0 || conj.empty()) break;
    // drop predicates that are not needed to reject the negatives
    for (std::size_t i = conj.size(); i-- > 0;) {
      std::vector<std::size_t> t = conj;
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
      if (!t.empty() && K.popcount(cover(t, vm, neg).data(), W) == 0) conj = std::move(t);
    }
    const RowSet newly = cover(conj, vm, remaining);
    const std::size_t gained = K.popcount(newly.data(), W);
    if (conj_log_prior(conj, cat) - cfg.log_miss * static_cast<double>(gained) <= 0.0) break;
    std::sort(conj.begin(), conj.end());
    greedy.conjunctions.push_back(conj);
    for (std::size_t w = 0; w < W; ++w) remaining[w] &= ~newly[w];
  }

  LearnResult res;
  res.positives = P;
  res.log_posterior = -HUGE_VAL;
  std::string res_text;
  auto consider = [&](DnfIndices f) {
    if (f.conjunctions.empty()) return;
    const double s = dnf_log_posterior(f, vm, cat, pos, neg, cfg);
    if (!std::isfinite(s)) return;
    const std::string t = dnf_text(f, cat);
    if (res.dnf.conjunctions.empty() || better(s, t, res.log_posterior, res_text)) {
      res.dnf = std::move(f);
      res.log_posterior = s;
      res_text = t;
    }
  };
  if (have_one) consider(DnfIndices{{one.preds}});
  consider(greedy);
  if (res.dnf.conjunctions.empty()) throw NoSeparator("no formula covers a positive without accepting a negative");

  RowSet hit(W, 0);
  for (const auto& c : res.dnf.conjunctions) {
    const RowSet cp = cover(c, vm, pos);
    for (std::size_t w = 0; w < W; ++w) hit[w] |= cp[w];
  }
  res.covered = K.popcount(hit.data(), W);
  return res;
}

Dnf to_dnf(const DnfIndices& f, const dsl::Catalog& cat) {
  Dnf d;
  for (const auto& c : f.conjunctions) {
    Conjunction conj;
    for (std::size_t p : c) conj.preds.push_back(cat[p].expr);
    d.conjunctions.push_back(std::move(conj));
  }
  return d;
}

}  // namespace stratdisc
