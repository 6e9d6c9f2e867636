// SPDX-License-Identifier: Apache-2.0
#include <string_view>

#include "stratdisc/errors.hpp"
#include "stratdisc/procedural.hpp"

namespace stratdisc {
namespace {

constexpr std::string_view kNext = " AND NEXT ";
constexpr std::string_view kUntil = " UNTIL ";
constexpr std::string_view kUnless = " UNLESS ";
constexpr std::string_view kGoTo = " GO TO ";
constexpr std::string_view kHoldWords = "IT STOPS APPLYING";
constexpr std::string_view kHoldAlias = "IT APPLIES";

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

// Positions of `sep` outside parentheses.
std::vector<std::size_t> top_level(std::string_view s, std::string_view sep) {
  std::vector<std::size_t> out;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (depth == 0 && s.compare(i, sep.size(), sep) == 0) {
      out.push_back(i);
      i += sep.size() - 1;
    }
  }
  return out;
}

std::vector<std::string_view> split_top(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> parts;
  std::size_t from = 0;
  for (std::size_t p : top_level(s, sep)) {
    parts.push_back(s.substr(from, p - from));
    from = p + sep.size();
  }
  parts.push_back(s.substr(from));
  return parts;
}

// Split at the first top-level occurrence of sep.
std::pair<std::string_view, std::optional<std::string_view>> cut(std::string_view s, std::string_view sep) {
  const auto pos = top_level(s, sep);
  if (pos.empty()) return {s, std::nullopt};
  return {s.substr(0, pos[0]), s.substr(pos[0] + sep.size())};
}

std::size_t offset_of(std::string_view whole, std::string_view part) {
  return static_cast<std::size_t>(part.data() - whole.data());
}

Conjunction parse_conj(std::string_view whole, std::string_view s) {
  s = trim(s);
  Conjunction c;
  if (s == "True") return c;
  if (s == "False") {
    c.is_false = true;
    return c;
  }
  if (s.empty()) throw SyntaxError("empty conjunction", offset_of(whole, s));
  for (auto part : split_top(s, " and ")) c.preds.push_back(dsl::parse(trim(part)));
  return c;
}

Condition parse_condition(std::string_view whole, std::string_view s) {
  s = trim(s);
  Condition c;
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')' && top_level(s, " or ").empty()) {
    const auto inner = s.substr(1, s.size() - 2);
    const auto parts = split_top(inner, " or ");
    if (parts.size() == 2) {
      for (auto p : parts) c.disjuncts.push_back(dsl::parse(trim(p)));
      return c;
    }
  }
  const auto parts = split_top(s, " or ");
  if (parts.size() > 2) throw SyntaxError("conditions have at most two disjuncts", offset_of(whole, s));
  for (auto p : parts) c.disjuncts.push_back(dsl::parse(trim(p)));
  return c;
}

Step parse_step(std::string_view whole, std::string_view s) {
  Step st;
  auto [head, unless] = cut(s, kUnless);
  if (unless) st.unless = parse_condition(whole, *unless);
  auto [conj, until] = cut(head, kUntil);
  st.conj = parse_conj(whole, conj);
  if (!until) {
    st.kind = StepKind::once;
  } else if (trim(*until) == kHoldWords || trim(*until) == kHoldAlias) {
    st.kind = StepKind::hold;
  } else {
    st.kind = StepKind::until;
    st.until = parse_condition(whole, *until);
  }
  return st;
}

int conj_complexity(const Conjunction& c) {
  if (c.preds.empty()) return 1;
  int n = 0;
  for (const auto& p : c.preds) n += dsl::atom_count(*p);
  return n;
}

int cond_complexity(const Condition& c) {
  int n = 0;
  for (const auto& p : c.disjuncts) n += dsl::atom_count(*p);
  return n;
}

bool same_condition(const Condition& a, const Condition& b) {
  if (a.disjuncts.size() != b.disjuncts.size()) return false;
  for (const auto& x : a.disjuncts) {
    bool found = false;
    for (const auto& y : b.disjuncts) found = found || dsl::equivalent_modulo_order(*x, *y);
    if (!found) return false;
  }
  return true;
}

bool same_opt(const std::optional<Condition>& a, const std::optional<Condition>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_condition(*a, *b);
}

}  // namespace

std::string to_string(const Condition& c) {
  if (c.disjuncts.size() == 1) return dsl::to_string(*c.disjuncts[0]);
  std::string s = "(";
  for (std::size_t i = 0; i < c.disjuncts.size(); ++i) s += (i ? " or " : "") + dsl::to_string(*c.disjuncts[i]);
  return s + ")";
}

bool holds(const Condition& c, const dsl::StateContext& ctx) {
  for (const auto& d : c.disjuncts)
    if (dsl::holds_in_state(*d, ctx)) return true;
  return false;
}

std::string to_string(const ProceduralFormula& f) {
  std::string s;
  for (std::size_t i = 0; i < f.steps.size(); ++i) {
    const Step& st = f.steps[i];
    if (i) s += kNext;
    s += to_string(st.conj);
    if (st.kind == StepKind::until) s += std::string(kUntil) + to_string(st.until);
    if (st.kind == StepKind::hold) s += std::string(kUntil) + std::string(kHoldWords);
    if (st.unless) s += std::string(kUnless) + to_string(*st.unless);
  }
  if (f.loop_target && *f.loop_target < f.steps.size()) {
    s += std::string(kGoTo) + to_string(f.steps[*f.loop_target].conj);
    if (f.loop_unless) s += std::string(kUnless) + to_string(*f.loop_unless);
  }
  return s;
}

ProceduralFormula parse_procedural(std::string_view text) {
  const std::string_view whole = text;
  text = trim(text);
  if (text.empty()) throw SyntaxError("empty formula", 0);
  ProceduralFormula f;
  auto parts = split_top(text, kNext);
  auto [last, jump] = cut(parts.back(), kGoTo);
  parts.back() = last;
  for (auto p : parts) f.steps.push_back(parse_step(whole, p));
  if (jump) {
    auto [target, unless] = cut(*jump, kUnless);
    const Conjunction tc = parse_conj(whole, target);
    for (std::size_t i = 0; i < f.steps.size() && !f.loop_target; ++i)
      if (equivalent_modulo_order(f.steps[i].conj, tc)) f.loop_target = i;
    if (!f.loop_target) throw SyntaxError("GO TO names no step", offset_of(whole, target));
    if (unless) f.loop_unless = parse_condition(whole, *unless);
  }
  return f;
}

int complexity(const ProceduralFormula& f) {
  int n = 0;
  for (const auto& st : f.steps) {
    n += conj_complexity(st.conj);
    if (st.kind == StepKind::until) n += cond_complexity(st.until);
    if (st.unless) n += cond_complexity(*st.unless);
  }
  if (f.loop_target && *f.loop_target < f.steps.size()) n += conj_complexity(f.steps[*f.loop_target].conj);
  if (f.loop_unless) n += cond_complexity(*f.loop_unless);
  return n;
}

bool well_formed(const ProceduralFormula& f, std::string* why) {
  auto fail = [&](const char* m) {
    if (why) *why = m;
    return false;
  };
  auto cond_ok = [](const Condition& c) { return !c.disjuncts.empty() && c.disjuncts.size() <= 2; };
  if (f.steps.empty()) return fail("no steps");
  for (const auto& st : f.steps) {
    if (st.conj.is_false && !st.conj.preds.empty()) return fail("False carries predicates");
    if (st.kind == StepKind::until && !cond_ok(st.until)) return fail("until needs one or two predicates");
    if (st.kind != StepKind::until && !st.until.disjuncts.empty()) return fail("stray until condition");
    if (st.unless && !cond_ok(*st.unless)) return fail("unless needs one or two predicates");
  }
  if (f.loop_target && *f.loop_target >= f.steps.size()) return fail("loop target out of range");
  if (f.loop_unless && !f.loop_target) return fail("loop condition without loop");
  if (f.loop_unless && !cond_ok(*f.loop_unless)) return fail("loop condition needs one or two predicates");
  return true;
}

ProceduralFormula hold_formula(Conjunction c) {
  ProceduralFormula f;
  Step st;
  st.conj = std::move(c);
  st.kind = StepKind::hold;
  f.steps.push_back(std::move(st));
  return f;
}

bool equivalent_modulo_order(const ProceduralFormula& a, const ProceduralFormula& b) {
  if (a.steps.size() != b.steps.size() || a.loop_target != b.loop_target) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const Step &x = a.steps[i], &y = b.steps[i];
    if (x.kind != y.kind || !equivalent_modulo_order(x.conj, y.conj) || !same_opt(x.unless, y.unless))
      return false;
    if (x.kind == StepKind::until && !same_condition(x.until, y.until)) return false;
  }
  return same_opt(a.loop_unless, b.loop_unless);
}

}  // namespace stratdisc
