// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "stratdisc/dsl.hpp"
#include "stratdisc/errors.hpp"

namespace stratdisc::dsl {
namespace {

constexpr std::string_view kStandardGrammar = R"(
START -> all(PREDS_AMONG_PRED_DEPTH)
START -> all(PREDS_AMONG_PRED_LEAF)
START -> all(PREDS_AMONG_PRED_ROOT)
START -> all(PREDS_AMONG_PRED_PARENT)
START -> all(PREDS_AMONG_PRED_CHILD)
START -> all(PREDS_AMONG_PRED_PRED)
START -> among(PREDS_AMONG_PRED_DEPTH)
START -> among(PREDS_AMONG_PRED_LEAF)
START -> among(PREDS_AMONG_PRED_ROOT)
START -> among(PREDS_AMONG_PRED_PARENT)
START -> among(PREDS_AMONG_PRED_CHILD)
START -> among(PREDS_AMONG_PRED_PRED)
START -> among(PREDS_DEPTH)
START -> among(PREDS_LEAF)
START -> among(PREDS_ROOT)
START -> among(PREDS_PARENT)
START -> among(PREDS_CHILD)
START -> among(PREDS_PRED)
START -> PRED
START -> GENERAL_PRED
PREDS_AMONG_PRED_DEPTH -> PREDS_DEPTH : AMONG_CHILD
PREDS_AMONG_PRED_DEPTH -> PREDS_DEPTH : AMONG_PARENT
PREDS_AMONG_PRED_DEPTH -> PREDS_DEPTH : AMONG_LEAF
PREDS_AMONG_PRED_DEPTH -> PREDS_DEPTH : AMONG_ROOT
PREDS_AMONG_PRED_LEAF -> PREDS_LEAF : AMONG_CHILD
PREDS_AMONG_PRED_LEAF -> PREDS_LEAF : AMONG_PARENT
PREDS_AMONG_PRED_LEAF -> PREDS_LEAF : AMONG_ROOT
PREDS_AMONG_PRED_LEAF -> PREDS_LEAF : AMONG_PRED
PREDS_AMONG_PRED_ROOT -> PREDS_ROOT : AMONG_CHILD
PREDS_AMONG_PRED_ROOT -> PREDS_ROOT : AMONG_PARENT
PREDS_AMONG_PRED_ROOT -> PREDS_ROOT : AMONG_LEAF
PREDS_AMONG_PRED_ROOT -> PREDS_ROOT : AMONG_PRED
PREDS_AMONG_PRED_PARENT -> PREDS_PARENT : AMONG_CHILD
PREDS_AMONG_PRED_PARENT -> PREDS_PARENT : AMONG_LEAF
PREDS_AMONG_PRED_PARENT -> PREDS_PARENT : AMONG_ROOT
PREDS_AMONG_PRED_PARENT -> PREDS_PARENT : AMONG_PRED
PREDS_AMONG_PRED_CHILD -> PREDS_CHILD : AMONG_PARENT
PREDS_AMONG_PRED_CHILD -> PREDS_CHILD : AMONG_LEAF
PREDS_AMONG_PRED_CHILD -> PREDS_CHILD : AMONG_ROOT
PREDS_AMONG_PRED_CHILD -> PREDS_CHILD : AMONG_PRED
PREDS_AMONG_PRED_PRED -> PREDS_PRED : AMONG_CHILD
PREDS_AMONG_PRED_PRED -> PREDS_PRED : AMONG_PARENT
PREDS_AMONG_PRED_PRED -> PREDS_PRED : AMONG_LEAF
PREDS_AMONG_PRED_PRED -> PREDS_PRED : AMONG_ROOT
PREDS_AMONG_PRED_PRED -> PREDS_PRED : AMONG_PRED
PREDS_DEPTH -> DEPTH
PREDS_DEPTH -> DEPTH and LEAF
PREDS_DEPTH -> DEPTH and ROOT
PREDS_DEPTH -> DEPTH and PARENT
PREDS_DEPTH -> DEPTH and CHILD
PREDS_DEPTH -> DEPTH and DEPTH
PREDS_DEPTH -> DEPTH and PRED
PREDS_LEAF -> LEAF
PREDS_LEAF -> LEAF and LEAF
PREDS_LEAF -> LEAF and ROOT
PREDS_LEAF -> LEAF and PARENT
PREDS_LEAF -> LEAF and CHILD
PREDS_LEAF -> LEAF and PRED
PREDS_ROOT -> ROOT
PREDS_ROOT -> ROOT and ROOT
PREDS_ROOT -> ROOT and PARENT
PREDS_ROOT -> ROOT and CHILD
PREDS_ROOT -> ROOT and PRED
PREDS_PARENT -> PARENT
PREDS_PARENT -> PARENT and PARENT
PREDS_PARENT -> PARENT and CHILD
PREDS_PARENT -> PARENT and PRED
PREDS_PARENT -> PARENT
PREDS_PARENT -> PARENT and PARENT
PREDS_PARENT -> PARENT and CHILD
PREDS_PARENT -> PARENT and PRED
PREDS_CHILD -> CHILD
PREDS_CHILD -> CHILD and CHILD
PREDS_CHILD -> CHILD and PRED
PREDS_PRED -> PRED
PREDS_PRED -> PRED and PRED
AMONG_PRED -> has_smallest_depth | has_largest_depth
AMONG_PRED -> has_best_path | has_most_paths
AMONG_CHILD -> has_child_highest_value | has_child_lowest_value
AMONG_PARENT -> has_parent_highest_value | has_parent_lowest_value
AMONG_LEAF -> has_leaf_highest_value | has_leaf_lowest_value
AMONG_ROOT -> has_root_highest_value | has_root_lowest_value
DEPTH -> depth(DEP) | not(depth(DEP))
LEAF -> has_leaf_highest_level_value | has_leaf_lowest_level_value
LEAF -> not(has_leaf_highest_level_value)
LEAF -> not(has_leaf_lowest_level_value)
ROOT -> has_root_highest_level_value | has_root_lowest_level_value
ROOT -> not(has_root_highest_level_value)
ROOT -> not(has_root_lowest_level_value)
PARENT -> has_parent_highest_level_value | has_parent_lowest_level_value
PARENT -> not(has_parent_highest_level_value)
PARENT -> not(has_parent_lowest_level_value)
CHILD -> has_child_highest_level_value | has_child_lowest_level_value
CHILD -> not(has_child_highest_level_value)
CHILD -> not(has_child_lowest_level_value)
PRED -> is_leaf | is_root | is_max_in_branch
PRED -> is_2max_in_branch | are_branch_leaves_observed
PRED -> not(is_leaf) | not(is_root) | not(is_max_in_branch)
PRED -> not(is_2max_in_branch)
PRED -> not(are_branch_leaves_observed) | not(is_observed)
GENERAL_PRED -> is_previous_observed_max | is_positive_observed
GENERAL_PRED -> are_leaves_observed
GENERAL_PRED -> are_roots_observed | is_previous_observed_positive
GENERAL_PRED -> is_previous_observed_parent
GENERAL_PRED -> is_previous_observed_sibling
GENERAL_PRED -> is_previous_observed_min
GENERAL_PRED -> is_previous_observed_max_nonleaf
GENERAL_PRED -> is_previous_observed_max_leaf
GENERAL_PRED -> is_previous_observed_max_root
GENERAL_PRED -> is_previous_observed_max_level(DEP)
GENERAL_PRED -> is_previous_observed_min_level(DEP)
GENERAL_PRED -> observed_count(NUM) | termination_return(RET)
NUM -> 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8
DEP -> 1 | 2 | 3
RET -> -30 | -25 | -15 | -10 | 0 | 10 | 15 | 25 | 30
)";

struct Segment {
  bool nonterminal;
  std::string text;
};

std::vector<Segment> split_production(const std::string& rhs, const Grammar& g) {
  std::vector<Segment> out;
  std::string lit;
  std::size_t i = 0;
  while (i < rhs.size()) {
    if (std::isupper(static_cast<unsigned char>(rhs[i])) &&
        (i == 0 || !(std::isalnum(static_cast<unsigned char>(rhs[i - 1])) || rhs[i - 1] == '_'))) {
      std::size_t j = i;
      while (j < rhs.size() && (std::isupper(static_cast<unsigned char>(rhs[j])) ||
                                std::isdigit(static_cast<unsigned char>(rhs[j])) || rhs[j] == '_'))
        ++j;
      const bool boundary =
          j == rhs.size() || !(std::islower(static_cast<unsigned char>(rhs[j])));
      const std::string tok = rhs.substr(i, j - i);
      if (boundary && g.productions.count(tok)) {
        if (!lit.empty()) out.push_back({false, std::move(lit)});
        lit.clear();
        out.push_back({true, tok});
        i = j;
        continue;
      }
    }
    lit += rhs[i++];
  }
  if (!lit.empty()) out.push_back({false, std::move(lit)});
  return out;
}

using Expansion = std::vector<std::pair<std::string, double>>;

class Expander {
 public:
  explicit Expander(const Grammar& g) : g_(g) {}

  const Expansion& expand(const std::string& nt) {
    if (auto it = memo_.find(nt); it != memo_.end()) return it->second;
    if (active_.count(nt)) throw GrammarCycle("grammar is recursive through " + nt);
    const auto pit = g_.productions.find(nt);
    if (pit == g_.productions.end()) throw GrammarCycle("undefined non-terminal " + nt);
    active_.insert(nt);
    const double p_prod = 1.0 / static_cast<double>(pit->second.size());
    Expansion out;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& rhs : pit->second) {
      Expansion partial{{"", p_prod}};
      for (const auto& seg : split_production(rhs, g_)) {
        Expansion next;
        if (!seg.nonterminal) {
          for (auto& [s, p] : partial) next.emplace_back(s + seg.text, p);
        } else {
          const Expansion& sub = expand(seg.text);
          next.reserve(partial.size() * sub.size());
          for (const auto& [s, p] : partial)
            for (const auto& [t, q] : sub) next.emplace_back(s + t, p * q);
        }
        partial = std::move(next);
      }
      for (auto& [s, p] : partial) {
        auto [it, fresh] = seen.emplace(s, out.size());
        if (fresh)
          out.emplace_back(std::move(s), p);
        else
          out[it->second].second += p;
      }
    }
    active_.erase(nt);
    return memo_.emplace(nt, std::move(out)).first->second;
  }

 private:
  const Grammar& g_;
  std::map<std::string, Expansion> memo_;
  std::set<std::string> active_;
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Grammar Grammar::parse(std::string_view text) {
  Grammar g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto arrow = line.find("->");
    if (arrow == std::string::npos) throw SyntaxError("grammar rule without '->'", lineno);
    const std::string lhs = trim(line.substr(0, arrow));
    std::string rhs = line.substr(arrow + 2);
    auto& prods = g.productions[lhs];
    std::size_t start = 0;
    while (true) {
      const auto bar = rhs.find('|', start);
      const std::string alt = trim(rhs.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
      if (alt.empty()) throw SyntaxError("empty production for " + lhs, lineno);
      prods.push_back(alt);
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
  }
  return g;
}

const Grammar& Grammar::standard() {
  static const Grammar g = parse(kStandardGrammar);
  return g;
}

Catalog Catalog::enumerate(const Grammar& g) {
  Expander ex(g);
  const Expansion& all = ex.expand(g.start);
  Catalog c;
  c.entries_.reserve(all.size());
  for (const auto& [text, p] : all) {
    ExprPtr e = parse(text);
    std::string canon = to_string(*e);
    auto [it, fresh] = c.by_text_.emplace(canon, c.entries_.size());
    if (fresh)
      c.entries_.push_back({std::move(e), std::move(canon), p, 0.0});
    else
      c.entries_[it->second].prior += p;
  }
  for (auto& en : c.entries_) en.log_prior = std::log(en.prior);
  return c;
}

const Catalog& Catalog::standard() {
  static const Catalog c = enumerate(Grammar::standard());
  return c;
}

std::optional<std::size_t> Catalog::find(const std::string& text) const {
  if (auto it = by_text_.find(text); it != by_text_.end()) return it->second;
  try {
    const auto canon = to_string(*parse(text));
    if (auto it = by_text_.find(canon); it != by_text_.end()) return it->second;
  } catch (const Error&) {
  }
  return std::nullopt;
}

std::vector<ExprPtr> Catalog::exprs() const {
  std::vector<ExprPtr> v;
  v.reserve(entries_.size());
  for (const auto& e : entries_) v.push_back(e.expr);
  return v;
}

Catalog Catalog::subset(const std::vector<std::size_t>& idx) const {
  Catalog c;
  for (std::size_t i : idx) {
    c.by_text_.emplace(entries_.at(i).text, c.entries_.size());
    c.entries_.push_back(entries_[i]);
  }
  return c;
}

const CompiledSet& Catalog::compiled() const {
  if (!compiled_) compiled_ = std::make_shared<CompiledSet>(exprs());
  return *compiled_;
}

std::vector<ExprPtr> allowed_condition_predicates(const Grammar& g) {
  Expander ex(g);
  std::vector<ExprPtr> out;
  std::set<std::string> seen;
  auto add = [&](ExprPtr e) {
    if (seen.insert(to_string(*e)).second) out.push_back(std::move(e));
  };
  if (g.productions.count("GENERAL_PRED"))
    for (const auto& [text, p] : ex.expand("GENERAL_PRED")) add(parse(text));
  add(make_atom(Atom::is_max_in_branch));
  add(make_atom(Atom::are_branch_leaves_observed));
  return out;
}

std::vector<ExprPtr> redundant_predicates(const Catalog& c, const Grammar& g) {
  std::vector<ExprPtr> out;
  for (const auto& e : c.entries())
    if (e.expr->conjuncts.size() == 1 && e.expr->conjuncts[0].atom == Atom::all) out.push_back(e.expr);
  for (auto& e : allowed_condition_predicates(g)) out.push_back(std::move(e));
  return out;
}

}  // namespace stratdisc::dsl
