// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <bit>
#include <unordered_map>

#include "stratdisc/errors.hpp"
#include "stratdisc/induction.hpp"

namespace stratdisc {

bool Conjunction::operator==(const Conjunction& o) const {
  if (is_false != o.is_false || preds.size() != o.preds.size()) return false;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (!(*preds[i] == *o.preds[i])) return false;
  return true;
}

std::string to_string(const Conjunction& c) {
  if (c.is_false) return "False";
  if (c.preds.empty()) return "True";
  std::string s;
  for (std::size_t i = 0; i < c.preds.size(); ++i) {
    if (i) s += " and ";
    s += dsl::to_string(*c.preds[i]);
  }
  return s;
}

std::string to_string(const Dnf& d) {
  if (d.conjunctions.empty()) return "False";
  std::string s;
  for (std::size_t i = 0; i < d.conjunctions.size(); ++i) {
    if (i) s += " or ";
    const bool wrap = d.conjunctions.size() > 1 && d.conjunctions[i].preds.size() > 1;
    s += wrap ? "(" + to_string(d.conjunctions[i]) + ")" : to_string(d.conjunctions[i]);
  }
  return s;
}

NodeMask eval_mask(const Conjunction& c, const dsl::StateContext& ctx) {
  if (c.is_false) return 0;
  NodeMask m = ctx.layout().all_mask;
  for (const auto& p : c.preds) {
    m &= dsl::eval_mask(*p, ctx);
    if (m == 0) break;
  }
  return m;
}

NodeMask eval_mask(const Dnf& d, const dsl::StateContext& ctx) {
  NodeMask m = 0;
  for (const auto& c : d.conjunctions) m |= eval_mask(c, ctx);
  return m;
}

bool equivalent_modulo_order(const Conjunction& a, const Conjunction& b) {
  if (a.is_false != b.is_false) return false;
  // compare the flattened literal sets so that "p and q" as one predicate
  // matches p, q as two
  auto flat = [](const Conjunction& c) {
    dsl::Expr e;
    for (const auto& p : c.preds) e.conjuncts.insert(e.conjuncts.end(), p->conjuncts.begin(), p->conjuncts.end());
    return e;
  };
  return dsl::equivalent_modulo_order(flat(a), flat(b));
}

nlohmann::json to_json(const Dnf& d) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : d.conjunctions) {
    nlohmann::json cj = nlohmann::json::array();
    for (const auto& p : c.preds) cj.push_back(dsl::to_string(*p));
    j.push_back(cj);
  }
  return j;
}

Dnf dnf_from_json(const nlohmann::json& j) {
  Dnf d;
  for (const auto& cj : j) {
    Conjunction c;
    for (const auto& p : cj) c.preds.push_back(dsl::parse(p.get<std::string>()));
    d.conjunctions.push_back(std::move(c));
  }
  return d;
}

void FormulaPolicy::distribution(const BeliefState& b, ActionDistribution& out) const {
  const dsl::StateContext ctx(b);
  NodeMask m = eval_mask(f_, ctx) & b.legal_mask();
  if (m == 0) m = bit(kTerminate);
  out.actions.clear();
  while (m != 0) {
    out.actions.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  out.probs.assign(out.actions.size(), 1.0 / static_cast<double>(out.actions.size()));
}

DemoSet generate_demonstrations(const Environment& env, const Policy& policy,
                                std::size_t num_demos, std::uint64_t seed, double neg_cap) {
  DemoSet d;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;
  std::vector<NodeMask> support;
  auto state_id = [&](const BeliefState& b, NodeMask sup) {
    auto& bucket = index[b.fingerprint()];
    for (std::size_t s : bucket)
      if (d.states[s] == b) return s;
    bucket.push_back(d.states.size());
    d.states.push_back(b);
    support.push_back(sup);
    return d.states.size() - 1;
  };

  std::size_t positives = 0;
  ActionDistribution dist;
  for (std::size_t i = 0; i < num_demos; ++i) {
    Rng truth_rng = Rng::stream(seed, 0x64656d6fULL, i);
    Rng action_rng = Rng::stream(seed, 0x64616374ULL, i);
    Trajectory t;
    t.truth = env.sample_ground_truth(truth_rng);
    BeliefState b(env);
    auto run = policy.start();
    for (std::size_t step = 0;; ++step) {
      if (step > env.node_count() + 1) throw NonterminatingPolicy("demonstration did not terminate");
      dist.clear();
      run->distribution(b, dist);
      NodeMask sup = 0;
      for (std::size_t k = 0; k < dist.actions.size(); ++k)
        if (dist.probs[k] > 0.0) sup |= bit(dist.actions[k]);
      const Computation a = dist.sample(action_rng);
      const std::size_t s = state_id(b, sup);
      d.rows.push_back({s, a, true, a == kTerminate && sup == bit(kTerminate)});
      ++positives;
      run->advance(b, a);
      if (a == kTerminate) break;
      b.reveal(a, t.truth[static_cast<std::size_t>(a)]);
      t.clicks.push_back(a);
    }
    d.trajectories.push_back(std::move(t));
  }

  std::vector<DemoSet::Row> negatives;
  for (std::size_t s = 0; s < d.states.size(); ++s) {
    NodeMask m = d.states[s].legal_mask() & ~support[s];
    while (m != 0) {
      negatives.push_back({s, std::countr_zero(m), false, false});
      m &= m - 1;
    }
  }
  const auto cap = static_cast<std::size_t>(neg_cap * static_cast<double>(positives));
  if (negatives.size() > cap) {
    Rng rng = Rng::stream(seed, 0x6e6567ULL);
    // partial Fisher-Yates, then restore a stable order
    for (std::size_t i = 0; i < cap; ++i) std::swap(negatives[i], negatives[i + rng.below(negatives.size() - i)]);
    negatives.resize(cap);
    std::sort(negatives.begin(), negatives.end(), [](const auto& a, const auto& b) {
      return a.state != b.state ? a.state < b.state : a.action < b.action;
    });
  }
  d.rows.insert(d.rows.end(), negatives.begin(), negatives.end());
  return d;
}

ValuationMatrix::ValuationMatrix(const DemoSet& demos, const dsl::Catalog& catalog)
    : rows_(demos.rows.size()), cols_(catalog.size()), words_((demos.rows.size() + 63) / 64) {
  bits_.assign(cols_ * words_, 0);
  std::vector<std::vector<std::size_t>> by_state(demos.states.size());
  for (std::size_t r = 0; r < rows_; ++r) by_state[demos.rows[r].state].push_back(r);
  const auto& compiled = catalog.compiled();
  std::vector<NodeMask> masks;
  for (std::size_t s = 0; s < demos.states.size(); ++s) {
    if (by_state[s].empty()) continue;
    const dsl::StateContext ctx(demos.states[s]);
    compiled.eval_all(ctx, masks);
    for (std::size_t p = 0; p < cols_; ++p) {
      const NodeMask m = masks[p];
      if (m == 0) continue;
      std::uint64_t* col = bits_.data() + p * words_;
      for (std::size_t r : by_state[s])
        if ((m >> demos.rows[r].action) & 1U) col[r / 64] |= std::uint64_t{1} << (r % 64);
    }
  }
}

}  // namespace stratdisc
