// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "stratdisc/errors.hpp"
#include "stratdisc/procedural.hpp"

namespace stratdisc {
namespace {

constexpr double kTie = 1e-9;

// Raised inside a stripped pass when a condition cannot be found.
struct RetryUnstripped {};

struct Run {
  std::size_t label;
  std::vector<std::size_t> ops;
};

struct TrajInfo {
  std::vector<Run> runs;
  std::vector<std::size_t> trace;
  std::size_t terminate_op = 0;
};

TrajInfo describe(const Dnf& dnf, const OpCache& ops, std::size_t t) {
  TrajInfo info;
  const auto labels = conjunction_labels(dnf, ops, t);
  const std::size_t b = ops.begin(t);
  info.terminate_op = ops.end(t) - 1;
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    if (labels[i] < 0) {
      // unexplained clicks stay with the step that was active
      if (!info.runs.empty()) info.runs.back().ops.push_back(b + i);
      continue;
    }
    const auto l = static_cast<std::size_t>(labels[i]);
    if (info.runs.empty() || info.runs.back().label != l) info.runs.push_back({l, {}});
    info.runs.back().ops.push_back(b + i);
  }
  for (const auto& r : info.runs) info.trace.push_back(r.label);
  return info;
}

constexpr std::size_t kEnd = static_cast<std::size_t>(-1);

std::vector<Segment> pair_segments(const std::vector<TrajInfo>& info, const std::vector<std::size_t>& members,
                                   std::size_t a, std::size_t b) {
  std::vector<Segment> out;
  for (std::size_t t : members) {
    const auto& runs = info[t].runs;
    if (b == kEnd) {
      if (!runs.empty() && runs.back().label == a) out.push_back({runs.back().ops, info[t].terminate_op});
      continue;
    }
    for (std::size_t r = 0; r + 1 < runs.size(); ++r)
      if (runs[r].label == a && runs[r + 1].label == b) out.push_back({runs[r].ops, runs[r + 1].ops.front()});
  }
  return out;
}

Conjunction strip(const Conjunction& c, const std::unordered_set<std::string>& redundant, bool& changed) {
  Conjunction out;
  out.is_false = c.is_false;
  for (const auto& p : c.preds)
    if (!redundant.count(dsl::to_string(*p))) out.preds.push_back(p);
  // a conjunction made only of redundant predicates is kept whole
  if (out.preds.empty() && !c.preds.empty()) return c;
  if (out.preds.size() != c.preds.size()) changed = true;
  return out;
}

Step true_hold() {
  Step s;
  s.kind = StepKind::hold;
  return s;
}

class ClassBuilder {
 public:
  ClassBuilder(const Dnf& dnf, const OpCache& ops, const std::vector<TrajInfo>& info,
               const std::vector<dsl::ExprPtr>& allowed, double threshold, bool strict)
      : dnf_(dnf), ops_(ops), info_(info), allowed_(allowed), threshold_(threshold), strict_(strict) {}

  ProceduralFormula build(const ClassSequence& cls, const std::vector<std::size_t>& members) {
    members_ = &members;
    const std::size_t n = cls.seq.size();
    std::size_t loop_pos = n;
    if (cls.loop) loop_pos = static_cast<std::size_t>(std::find(cls.seq.begin(), cls.seq.end(), *cls.loop) - cls.seq.begin());

    // where each member's trace ends inside the class
    std::vector<std::vector<std::size_t>> enders(n);
    for (std::size_t t : members) {
      const auto m = match_class(cls, info_[t].trace);
      const std::size_t end = (!m || m->empty()) ? 0 : m->back();
      enders[end].push_back(t);
    }

    ProceduralFormula f;
    for (std::size_t i = 0; i < n; ++i) {
      const bool last = i + 1 == n;
      const std::size_t target = !last ? cls.seq[i + 1] : (cls.loop ? *cls.loop : kEnd);
      Step st;
      st.conj = dnf_.conjunctions[cls.seq[i]];
      auto partial = [&](const Step& cand) {
        ProceduralFormula p = f;
        p.steps.push_back(cand);
        if (!last) p.steps.push_back(true_hold());
        if (last && cls.loop) p.loop_target = loop_pos;
        return p;
      };
      choose_until(st, pair_segments(info_, members, cls.seq[i], target), partial);

      // members that stop at this step although the class goes on
      const bool early = !last || cls.loop;
      if (early && !enders[i].empty()) {
        std::vector<Segment> segs;
        for (std::size_t t : enders[i]) {
          const auto& runs = info_[t].runs;
          Segment s;
          if (!runs.empty() && runs.back().label == cls.seq[i]) s.during = runs.back().ops;
          s.at = info_[t].terminate_op;
          segs.push_back(std::move(s));
        }
        if (!last) {
          choose_unless(segs, [&](const std::optional<Condition>& c) {
            Step s = st;
            s.unless = c;
            return partial(s);
          }, st.unless);
        } else {
          ProceduralFormula base = partial(st);
          choose_unless(segs, [&](const std::optional<Condition>& c) {
            ProceduralFormula p = base;
            p.loop_unless = c;
            return p;
          }, f.loop_unless);
        }
      }
      f.steps.push_back(std::move(st));
    }
    if (cls.loop) f.loop_target = loop_pos;
    return f;
  }

 private:
  double score(const ProceduralFormula& f) const { return epsilon_fit(f, ops_, members_).log_likelihood; }

  template <class Partial>
  void choose_until(Step& st, const std::vector<Segment>& segs, const Partial& partial) {
    std::vector<Condition> cands;
    if (!segs.empty()) cands = candidate_conditions(segs, ops_, allowed_, threshold_);
    if (cands.empty() && strict_) throw RetryUnstripped{};
    // conditions first, then holding the step, then a single click; a
    // later option must be strictly better to win
    double best = -HUGE_VAL;
    bool have = false;
    Step chosen = st;
    auto offer = [&](const Step& s) {
      const double v = score(partial(s));
      if (!have || v > best + kTie) {
        best = v;
        chosen = s;
        have = true;
      }
    };
    for (const auto& c : cands) {
      Step s = st;
      s.kind = StepKind::until;
      s.until = c;
      offer(s);
    }
    for (StepKind k : {StepKind::hold, StepKind::once}) {
      Step s = st;
      s.kind = k;
      offer(s);
    }
    st = chosen;
  }

  template <class Make>
  void choose_unless(const std::vector<Segment>& segs, const Make& make, std::optional<Condition>& out) {
    const auto cands = candidate_conditions(segs, ops_, allowed_, threshold_);
    if (cands.empty()) {
      if (strict_) throw RetryUnstripped{};
      return;  // FALSE: never stop early
    }
    double best = score(make(std::nullopt));
    for (const auto& c : cands) {
      const double v = score(make(c));
      if (v > best + kTie || (!out && v >= best - kTie)) {
        best = std::max(best, v);
        out = c;
      }
    }
  }

  const Dnf& dnf_;
  const OpCache& ops_;
  const std::vector<TrajInfo>& info_;
  const std::vector<dsl::ExprPtr>& allowed_;
  double threshold_;
  bool strict_;
  const std::vector<std::size_t>* members_ = nullptr;
};

TransformResult transform(const Dnf& dnf, const OpCache& ops, const std::vector<dsl::ExprPtr>& allowed,
                          double threshold, bool strict) {
  const std::size_t T = ops.num_trajectories();
  std::vector<TrajInfo> info;
  std::vector<std::vector<std::size_t>> traces;
  for (std::size_t t = 0; t < T; ++t) {
    info.push_back(describe(dnf, ops, t));
    traces.push_back(info.back().trace);
  }
  TransformResult res;
  auto classes = max_sequences(build_transition_graph(traces));
  if (classes.empty()) classes.push_back({{0}, std::nullopt});
  std::vector<std::vector<std::size_t>> members(classes.size());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < classes.size(); ++c)
      if (match_class(classes[c], traces[t])) {
        members[c].push_back(t);
        break;
      }
  ClassBuilder builder(dnf, ops, info, allowed, threshold, strict);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (members[c].empty()) continue;
    res.class_formulas.push_back(builder.build(classes[c], members[c]));
    res.classes.push_back(classes[c]);
    res.members.push_back(members[c]);
  }
  return res;
}

}  // namespace

std::vector<Condition> candidate_conditions(const std::vector<Segment>& segments, const OpCache& ops,
                                            const std::vector<dsl::ExprPtr>& allowed, double threshold) {
  const std::size_t S = segments.size(), P = allowed.size();
  if (S == 0) return {};
  // quiet[p][s]: false throughout the segment; fires[p][s]: true at its end
  std::vector<std::vector<char>> quiet(P, std::vector<char>(S)), fires(P, std::vector<char>(S));
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t s = 0; s < S; ++s) {
      bool q = true;
      for (std::size_t o : segments[s].during)
        if (dsl::holds_in_state(*allowed[p], ops.ctx(o))) {
          q = false;
          break;
        }
      quiet[p][s] = q;
      fires[p][s] = dsl::holds_in_state(*allowed[p], ops.ctx(segments[s].at));
    }
  const double need = (1.0 - threshold) * static_cast<double>(S) - 1e-9;
  std::vector<std::size_t> order(P);
  for (std::size_t p = 0; p < P; ++p) order[p] = p;
  std::vector<std::string> text(P);
  for (std::size_t p = 0; p < P; ++p) text[p] = dsl::to_string(*allowed[p]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return text[a] < text[b]; });

  std::vector<Condition> out;
  for (std::size_t p : order) {
    std::size_t ok = 0;
    for (std::size_t s = 0; s < S; ++s) ok += quiet[p][s] && fires[p][s];
    if (static_cast<double>(ok) >= need) out.push_back({{allowed[p]}});
  }
  std::vector<std::pair<std::string, Condition>> pairs;
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = i + 1; j < P; ++j) {
      const std::size_t p = order[i], q = order[j];
      if (text[p] == text[q]) continue;
      std::size_t ok = 0;
      for (std::size_t s = 0; s < S; ++s) ok += quiet[p][s] && quiet[q][s] && (fires[p][s] || fires[q][s]);
      if (static_cast<double>(ok) >= need) {
        Condition c{{allowed[p], allowed[q]}};
        pairs.emplace_back(to_string(c), c);
      }
    }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [t, c] : pairs) out.push_back(std::move(c));
  return out;
}

Condition find_condition(const std::vector<Segment>& segments, const OpCache& ops,
                         const std::vector<dsl::ExprPtr>& allowed, double threshold,
                         const std::function<double(const Condition&)>& score) {
  const auto cands = candidate_conditions(segments, ops, allowed, threshold);
  if (cands.empty()) throw NoCondition("no condition separates the steps");
  std::size_t best = 0;
  double bv = -HUGE_VAL;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double v = score(cands[i]);
    if (i == 0 || v > bv + kTie) {
      bv = v;
      best = i;
    }
  }
  return cands[best];
}

TransformResult dnf2ltl(const Environment& env, const Dnf& dnf, const std::vector<Trajectory>& demos,
                        const std::vector<dsl::ExprPtr>& allowed, const std::vector<dsl::ExprPtr>& redundant,
                        const TransformConfig& cfg) {
  std::vector<std::size_t> everyone(demos.size());
  for (std::size_t i = 0; i < demos.size(); ++i) everyone[i] = i;
  auto single = [&](Conjunction c) {
    TransformResult r;
    r.class_formulas.push_back(hold_formula(std::move(c)));
    r.classes.push_back({{0}, std::nullopt});
    r.members.push_back(everyone);
    return r;
  };
  if (dnf.conjunctions.empty()) {
    Conjunction f;
    f.is_false = true;
    return single(f);
  }
  for (const auto& c : dnf.conjunctions)
    if (c.is_true()) return single(c);
  if (demos.empty()) throw TransformFailed("no demonstrations to order the conjunctions");

  const OpCache ops(env, demos);
  std::unordered_set<std::string> red;
  for (const auto& r : redundant) red.insert(dsl::to_string(*r));
  bool changed = false;
  Dnf stripped;
  for (const auto& c : dnf.conjunctions) stripped.conjunctions.push_back(strip(c, red, changed));

  TransformResult res;
  if (changed) {
    try {
      res = transform(stripped, ops, allowed, cfg.threshold, true);
      res.stripped = true;
    } catch (const RetryUnstripped&) {
      res = transform(dnf, ops, allowed, cfg.threshold, false);
    }
  } else {
    res = transform(dnf, ops, allowed, cfg.threshold, false);
  }
  if (res.class_formulas.empty()) throw TransformFailed("no equivalence class produced a formula");
  return res;
}

ProceduralFormula prune(const ProceduralFormula& f, const OpCache& ops) {
  ProceduralFormula cur = f;
  double best = epsilon_fit(cur, ops).log_likelihood;
  for (bool dropped = true; dropped;) {
    dropped = false;
    for (std::size_t s = 0; s < cur.steps.size(); ++s) {
      for (std::size_t j = 0; j < cur.steps[s].conj.preds.size();) {
        ProceduralFormula cand = cur;
        auto& preds = cand.steps[s].conj.preds;
        preds.erase(preds.begin() + static_cast<std::ptrdiff_t>(j));
        const double v = epsilon_fit(cand, ops).log_likelihood;
        if (v > best) {
          cur = std::move(cand);
          best = v;
          dropped = true;
        } else {
          ++j;
        }
      }
    }
  }
  return cur;
}

ProceduralFormula prune(const Environment& env, const ProceduralFormula& f, const std::vector<Trajectory>& trajs) {
  const OpCache ops(env, trajs);
  return prune(f, ops);
}

ProceduralFormula select_pruned(const Environment& env, const std::vector<ProceduralFormula>& candidates,
                                const std::vector<Trajectory>& trajs) {
  if (candidates.empty()) throw TransformFailed("no candidate formulas");
  const OpCache ops(env, trajs);
  ProceduralFormula best;
  double bv = -HUGE_VAL;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ProceduralFormula p = prune(candidates[i], ops);
    const double v = epsilon_fit(p, ops).log_likelihood;
    if (i == 0 || v > bv) {
      bv = v;
      best = std::move(p);
    }
  }
  return best;
}

}  // namespace stratdisc
