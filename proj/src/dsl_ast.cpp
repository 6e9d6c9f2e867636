// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "stratdisc/dsl.hpp"
#include "stratdisc/errors.hpp"

namespace stratdisc::dsl {
namespace {

constexpr std::array<AtomInfo, kAtomCount> kInfo{{
    {"is_observed", Scope::node, false},
    {"is_leaf", Scope::node, false},
    {"is_root", Scope::node, false},
    {"depth", Scope::node, true},
    {"is_max_in_branch", Scope::node, false},
    {"is_2max_in_branch", Scope::node, false},
    {"are_branch_leaves_observed", Scope::node, false},
    {"has_leaf_highest_level_value", Scope::node, false},
    {"has_leaf_lowest_level_value", Scope::node, false},
    {"has_root_highest_level_value", Scope::node, false},
    {"has_root_lowest_level_value", Scope::node, false},
    {"has_parent_highest_level_value", Scope::node, false},
    {"has_parent_lowest_level_value", Scope::node, false},
    {"has_child_highest_level_value", Scope::node, false},
    {"has_child_lowest_level_value", Scope::node, false},
    {"is_ancestor_max_val", Scope::node, false},
    {"is_successor_max_val", Scope::node, false},
    {"is_on_highest_expected_value_path", Scope::node, false},
    {"is_previous_observed_parent", Scope::node, false},
    {"is_previous_observed_sibling", Scope::node, false},
    {"are_leaves_observed", Scope::state, false},
    {"are_roots_observed", Scope::state, false},
    {"is_positive_observed", Scope::state, false},
    {"is_previous_observed_max", Scope::state, false},
    {"is_previous_observed_positive", Scope::state, false},
    {"is_previous_observed_min", Scope::state, false},
    {"is_previous_observed_max_nonleaf", Scope::state, false},
    {"is_previous_observed_max_leaf", Scope::state, false},
    {"is_previous_observed_max_root", Scope::state, false},
    {"is_previous_observed_max_level", Scope::state, true},
    {"is_previous_observed_min_level", Scope::state, true},
    {"observed_count", Scope::state, true},
    {"termination_return", Scope::state, true},
    {"has_smallest_depth", Scope::list, false},
    {"has_largest_depth", Scope::list, false},
    {"has_best_path", Scope::list, false},
    {"has_most_branches", Scope::list, false},
    {"has_child_highest_value", Scope::list, false},
    {"has_child_lowest_value", Scope::list, false},
    {"has_parent_highest_value", Scope::list, false},
    {"has_parent_lowest_value", Scope::list, false},
    {"has_leaf_highest_value", Scope::list, false},
    {"has_leaf_lowest_value", Scope::list, false},
    {"has_root_highest_value", Scope::list, false},
    {"has_root_lowest_value", Scope::list, false},
    {"among", Scope::higher, false},
    {"all", Scope::higher, false},
}};

}  // namespace

const AtomInfo& info(Atom a) { return kInfo[static_cast<std::size_t>(a)]; }

std::optional<Atom> atom_by_name(std::string_view name) {
  if (name == "has_most_paths") return Atom::has_most_branches;
  if (name == "has_parent_smallest_value") return Atom::has_parent_lowest_value;
  if (name == "all_") return Atom::all;
  for (int i = 0; i < kAtomCount; ++i)
    if (kInfo[static_cast<std::size_t>(i)].name == name) return static_cast<Atom>(i);
  return std::nullopt;
}

const std::vector<Atom>& all_atoms() {
  static const std::vector<Atom> atoms = [] {
    std::vector<Atom> v;
    for (int i = 0; i < kAtomCount; ++i) v.push_back(static_cast<Atom>(i));
    return v;
  }();
  return atoms;
}

bool Literal::operator==(const Literal& o) const {
  if (atom != o.atom || arg != o.arg || negated != o.negated || selector != o.selector)
    return false;
  if (inner == o.inner) return true;
  if (!inner || !o.inner) return false;
  return *inner == *o.inner;
}

ExprPtr make_literal(Literal l) { return std::make_shared<const Expr>(Expr{{std::move(l)}}); }

ExprPtr make_atom(Atom a, int arg) {
  Literal l;
  l.atom = a;
  l.arg = arg;
  return make_literal(std::move(l));
}

ExprPtr make_not(Atom a, int arg) {
  Literal l;
  l.atom = a;
  l.arg = arg;
  l.negated = true;
  return make_literal(std::move(l));
}

ExprPtr make_and(std::vector<Literal> conjuncts) {
  return std::make_shared<const Expr>(Expr{std::move(conjuncts)});
}

ExprPtr make_among(ExprPtr inner, std::optional<Atom> selector) {
  Literal l;
  l.atom = Atom::among;
  l.inner = std::move(inner);
  l.selector = selector;
  return make_literal(std::move(l));
}

ExprPtr make_all(ExprPtr inner, Atom selector) {
  Literal l;
  l.atom = Atom::all;
  l.inner = std::move(inner);
  l.selector = selector;
  return make_literal(std::move(l));
}

std::string to_string(const Literal& l) {
  std::string s(info(l.atom).name);
  if (l.atom == Atom::among || l.atom == Atom::all) {
    s += '(';
    if (l.inner) s += to_string(*l.inner);
    if (l.selector) {
      s += " : ";
      s += info(*l.selector).name;
    }
    s += ')';
  } else if (info(l.atom).has_int_arg) {
    s += '(' + std::to_string(l.arg) + ')';
  }
  return l.negated ? "not(" + s + ")" : s;
}

std::string to_string(const Expr& e) {
  std::string s;
  for (std::size_t i = 0; i < e.conjuncts.size(); ++i) {
    if (i) s += " and ";
    s += to_string(e.conjuncts[i]);
  }
  return s;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view t) : t_(t) {}

  ExprPtr parse_all() {
    auto e = parse_conj();
    skip_ws();
    if (pos_ != t_.size()) throw SyntaxError("unexpected trailing text", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < t_.size() && t_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) throw SyntaxError(std::string("expected '") + c + "'", pos_);
  }

  bool consume_word(std::string_view w) {
    skip_ws();
    if (t_.substr(pos_, w.size()) != w) return false;
    const std::size_t end = pos_ + w.size();
    if (end < t_.size() && (std::isalnum(static_cast<unsigned char>(t_[end])) || t_[end] == '_'))
      return false;
    pos_ = end;
    return true;
  }

  std::string_view ident() {
    skip_ws();
    const std::size_t b = pos_;
    while (pos_ < t_.size() &&
           (std::isalnum(static_cast<unsigned char>(t_[pos_])) || t_[pos_] == '_'))
      ++pos_;
    if (b == pos_) throw SyntaxError("expected predicate name", pos_);
    return t_.substr(b, pos_ - b);
  }

  int integer() {
    skip_ws();
    const std::size_t b = pos_;
    if (pos_ < t_.size() && (t_[pos_] == '-' || t_[pos_] == '+')) ++pos_;
    while (pos_ < t_.size() && std::isdigit(static_cast<unsigned char>(t_[pos_]))) ++pos_;
    int v = 0;
    const char* first = t_.data() + b + (t_[b] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, t_.data() + pos_, v);
    if (ec != std::errc() || ptr != t_.data() + pos_) throw SyntaxError("expected integer", b);
    return v;
  }

  ExprPtr parse_conj() {
    std::vector<Literal> lits;
    lits.push_back(parse_literal());
    while (consume_word("and")) lits.push_back(parse_literal());
    return make_and(std::move(lits));
  }

  Literal parse_literal() {
    skip_ws();
    const std::size_t at = pos_;
    if (consume_word("not")) {
      expect('(');
      Literal l = parse_literal();
      if (l.negated) throw SyntaxError("double negation", at);
      l.negated = true;
      expect(')');
      return l;
    }
    const std::string_view name = ident();
    const auto atom = atom_by_name(name);
    if (!atom) throw UnknownAtom("unknown predicate '" + std::string(name) + "'");
    Literal l;
    l.atom = *atom;
    const AtomInfo& ai = info(*atom);
    if (ai.scope == Scope::higher) {
      expect('(');
      l.inner = parse_conj();
      if (consume(':') || consume(',')) {
        const std::size_t sp = pos_;
        const std::string_view sel = ident();
        const auto s = atom_by_name(sel);
        if (!s) throw UnknownAtom("unknown predicate '" + std::string(sel) + "'");
        if (info(*s).scope != Scope::list) throw SyntaxError("selector must be a list predicate", sp);
        l.selector = s;
      } else if (*atom == Atom::all) {
        throw SyntaxError("all requires a selector", pos_);
      }
      expect(')');
    } else if (ai.has_int_arg) {
      expect('(');
      l.arg = integer();
      expect(')');
    }
    return l;
  }

  std::string_view t_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parse(std::string_view text) { return Parser(text).parse_all(); }

int atom_count(const Expr& e) {
  int n = 0;
  for (const auto& l : e.conjuncts) {
    ++n;
    if (l.inner) n += atom_count(*l.inner);
    if (l.selector) ++n;
  }
  return n;
}

bool is_state_level(const Expr& e) {
  for (const auto& l : e.conjuncts) {
    const Scope s = info(l.atom).scope;
    if (s == Scope::state || l.atom == Atom::all) continue;
    return false;
  }
  return true;
}

namespace {

std::string canonical(const Expr& e);

std::string canonical(const Literal& l) {
  std::string s = l.negated ? "!" : "";
  s += info(l.atom).name;
  s += '#' + std::to_string(l.arg);
  if (l.inner) s += '[' + canonical(*l.inner) + ']';
  if (l.selector) s += ':' + std::string(info(*l.selector).name);
  return s;
}

std::string canonical(const Expr& e) {
  std::vector<std::string> parts;
  for (const auto& l : e.conjuncts) parts.push_back(canonical(l));
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  std::string s;
  for (const auto& p : parts) s += p + '&';
  return s;
}

}  // namespace

bool equivalent_modulo_order(const Expr& a, const Expr& b) { return canonical(a) == canonical(b); }

}  // namespace stratdisc::dsl
