// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <bit>
#include <functional>

#include "stratdisc/procedural.hpp"

namespace stratdisc {

Resolution resolve(const ProceduralFormula& f, const dsl::StateContext& ctx, std::size_t step) {
  const NodeMask legal = ctx.belief().legal_mask();
  const std::size_t n = f.steps.size();
  std::size_t i = step;
  // every step can be skipped at most once per jump, so this bounds a cycle
  for (std::size_t guard = 0; guard < 2 * n + 4; ++guard) {
    if (i >= n) {
      if (f.loop_target && *f.loop_target < n && !(f.loop_unless && holds(*f.loop_unless, ctx))) {
        i = *f.loop_target;
        continue;
      }
      return {i, bit(kTerminate), true};
    }
    const Step& st = f.steps[i];
    if (st.unless && holds(*st.unless, ctx)) return {i, bit(kTerminate), true};
    if (st.kind == StepKind::until && holds(st.until, ctx)) {
      ++i;
      continue;
    }
    const NodeMask allowed = eval_mask(st.conj, ctx) & legal;
    if (allowed == 0) {
      if (st.kind == StepKind::until) return {i, bit(kTerminate), true};
      ++i;
      continue;
    }
    return {i, allowed, false};
  }
  return {i, bit(kTerminate), true};
}

std::size_t next_step(const ProceduralFormula& f, const Resolution& r) {
  if (r.finished || r.step >= f.steps.size()) return r.step;
  return f.steps[r.step].kind == StepKind::once ? r.step + 1 : r.step;
}

namespace {

void uniform_over(NodeMask m, ActionDistribution& out) {
  out.actions.clear();
  while (m != 0) {
    out.actions.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  out.probs.assign(out.actions.size(), 1.0 / static_cast<double>(out.actions.size()));
}

class LtlRun : public PolicyRun {
 public:
  explicit LtlRun(const ProceduralFormula* f) : f_(f) {}
  void distribution(const BeliefState& b, ActionDistribution& out) override {
    const dsl::StateContext ctx(b);
    uniform_over(resolve(*f_, ctx, step_).allowed, out);
  }
  void advance(const BeliefState& b, Computation) override {
    const dsl::StateContext ctx(b);
    step_ = next_step(*f_, resolve(*f_, ctx, step_));
  }

 private:
  const ProceduralFormula* f_;
  std::size_t step_ = 0;
};

}  // namespace

std::unique_ptr<PolicyRun> LtlPolicy::start() const { return std::make_unique<LtlRun>(&f_); }

std::vector<std::size_t> LtlPolicy::step_indices(const Environment& env, const Trajectory& t) const {
  std::vector<std::size_t> out;
  std::size_t step = 0;
  for (const auto& op : replay(env, t)) {
    const dsl::StateContext ctx(op.belief);
    const Resolution r = resolve(f_, ctx, step);
    out.push_back(r.step);
    step = next_step(f_, r);
  }
  return out;
}

OpCache::OpCache(const Environment& env, const std::vector<Trajectory>& trajs) {
  begin_.push_back(0);
  for (const auto& t : trajs) {
    for (auto& op : replay(env, t)) {
      beliefs_.push_back(op.belief);
      actions_.push_back(op.action);
    }
    begin_.push_back(actions_.size());
  }
  ctx_.reserve(beliefs_.size());
  for (const auto& b : beliefs_) ctx_.emplace_back(b);
}

namespace {

void accumulate(EpsilonStats& total, const EpsilonStats& s) {
  total.n_allowed += s.n_allowed;
  total.n_disallowed += s.n_disallowed;
  total.log_base += s.log_base;
}

EpsilonFit finish(const EpsilonStats& s) {
  EpsilonFit fit;
  fit.stats = s;
  const double n = s.n_allowed + s.n_disallowed;
  fit.epsilon = n > 0.0 ? s.n_disallowed / n : 0.0;
  fit.log_likelihood = epsilon_log_likelihood(s, fit.epsilon);
  return fit;
}

}  // namespace

EpsilonFit epsilon_fit(const ProceduralFormula& f, const OpCache& ops, const std::vector<std::size_t>* subset) {
  EpsilonStats total;
  SupportTrace st;
  auto one = [&](std::size_t t) {
    st.in_support.clear();
    st.support_size.clear();
    st.legal_size.clear();
    std::size_t step = 0;
    for (std::size_t o = ops.begin(t); o < ops.end(t); ++o) {
      const auto& ctx = ops.ctx(o);
      const Resolution r = resolve(f, ctx, step);
      st.in_support.push_back((r.allowed >> ops.action(o)) & 1U);
      st.support_size.push_back(std::popcount(r.allowed));
      st.legal_size.push_back(std::popcount(ctx.belief().legal_mask()));
      step = next_step(f, r);
    }
    accumulate(total, epsilon_stats(st));
  };
  if (subset) {
    for (std::size_t t : *subset) one(t);
  } else {
    for (std::size_t t = 0; t < ops.num_trajectories(); ++t) one(t);
  }
  return finish(total);
}

EpsilonFit epsilon_fit(const Environment& env, const Policy& policy, const std::vector<Trajectory>& trajs) {
  EpsilonStats total;
  for (const auto& t : trajs) accumulate(total, epsilon_stats(support_along(env, policy, t)));
  return finish(total);
}

std::vector<int> conjunction_labels(const Dnf& dnf, const OpCache& ops, std::size_t t) {
  std::vector<int> out;
  for (std::size_t o = ops.begin(t); o < ops.end(t); ++o) {
    int label = -1;
    for (std::size_t c = 0; c < dnf.conjunctions.size() && label < 0; ++c)
      if ((eval_mask(dnf.conjunctions[c], ops.ctx(o)) >> ops.action(o)) & 1U) label = static_cast<int>(c);
    out.push_back(label);
  }
  return out;
}

std::vector<std::size_t> conjunction_trace(const Dnf& dnf, const OpCache& ops, std::size_t t) {
  const auto labels = conjunction_labels(dnf, ops, t);
  std::vector<std::size_t> out;
  // the final terminate ends the trajectory and is not part of the trace
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto l = static_cast<std::size_t>(labels[i]);
    if (out.empty() || out.back() != l) out.push_back(l);
  }
  return out;
}

std::vector<std::size_t> conjunction_trace(const Environment& env, const Trajectory& t, const Dnf& dnf) {
  const OpCache ops(env, {t});
  return conjunction_trace(dnf, ops, 0);
}

TransitionGraph build_transition_graph(const std::vector<std::vector<std::size_t>>& traces) {
  TransitionGraph g;
  for (const auto& tr : traces)
    for (std::size_t i = 0; i < tr.size(); ++i) {
      g.nodes.insert(tr[i]);
      if (i + 1 < tr.size() && tr[i] != tr[i + 1]) g.edges.insert({tr[i], tr[i + 1]});
    }
  return g;
}

std::string to_string(const ClassSequence& c) {
  std::string s;
  for (std::size_t i = 0; i < c.seq.size(); ++i) s += (i ? " " : "") + ("c" + std::to_string(c.seq[i]));
  if (c.loop) s += " LOOP c" + std::to_string(*c.loop);
  return s;
}

std::vector<ClassSequence> max_sequences(const TransitionGraph& g) {
  std::set<std::pair<std::vector<std::size_t>, std::optional<std::size_t>>> found;
  std::vector<std::size_t> path;
  std::function<void()> dfs = [&]() {
    const std::size_t last = path.back();
    bool extended = false;
    std::vector<std::size_t> back;
    for (auto it = g.edges.lower_bound({last, 0}); it != g.edges.end() && it->first == last; ++it) {
      const std::size_t v = it->second;
      if (std::find(path.begin(), path.end(), v) != path.end()) {
        back.push_back(v);
        continue;
      }
      extended = true;
      path.push_back(v);
      dfs();
      path.pop_back();
    }
    if (extended) return;
    if (back.empty()) found.insert({path, std::nullopt});
    for (std::size_t v : back) found.insert({path, v});
  };
  for (std::size_t n : g.nodes) {
    path = {n};
    dfs();
  }
  std::vector<ClassSequence> out;
  for (const auto& [seq, loop] : found) out.push_back({seq, loop});
  std::stable_sort(out.begin(), out.end(), [](const ClassSequence& a, const ClassSequence& b) {
    const std::size_t la = a.seq.size() + (a.loop ? 1 : 0), lb = b.seq.size() + (b.loop ? 1 : 0);
    return la > lb;
  });
  return out;
}

std::optional<std::vector<std::size_t>> match_class(const ClassSequence& c, const std::vector<std::size_t>& trace) {
  const std::size_t n = c.seq.size();
  std::size_t k = n;
  if (c.loop) k = static_cast<std::size_t>(std::find(c.seq.begin(), c.seq.end(), *c.loop) - c.seq.begin());
  auto at = [&](std::size_t j) { return j < n ? c.seq[j] : c.seq[k + (j - n) % (n - k)]; };
  auto pos = [&](std::size_t j) { return j < n ? j : k + (j - n) % (n - k); };
  const std::size_t limit = k < n ? n + (trace.size() + 1) * (n - k) : n;
  std::vector<std::size_t> out;
  std::size_t j = 0;
  for (std::size_t x : trace) {
    while (j < limit && at(j) != x) ++j;
    if (j >= limit) return std::nullopt;
    out.push_back(pos(j));
    ++j;
  }
  return out;
}

}  // namespace stratdisc
