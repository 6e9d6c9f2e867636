// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stratdisc/env.hpp"

namespace stratdisc::dsl {

enum class Atom : std::uint8_t {
  // about the given node
  is_observed,
  is_leaf,
  is_root,
  depth,
  is_max_in_branch,
  is_2max_in_branch,
  are_branch_leaves_observed,
  has_leaf_highest_level_value,
  has_leaf_lowest_level_value,
  has_root_highest_level_value,
  has_root_lowest_level_value,
  has_parent_highest_level_value,
  has_parent_lowest_level_value,
  has_child_highest_level_value,
  has_child_lowest_level_value,
  is_ancestor_max_val,
  is_successor_max_val,
  is_on_highest_expected_value_path,
  is_previous_observed_parent,
  is_previous_observed_sibling,
  // about the state only
  are_leaves_observed,
  are_roots_observed,
  is_positive_observed,
  is_previous_observed_max,
  is_previous_observed_positive,
  is_previous_observed_min,
  is_previous_observed_max_nonleaf,
  is_previous_observed_max_leaf,
  is_previous_observed_max_root,
  is_previous_observed_max_level,
  is_previous_observed_min_level,
  observed_count,
  termination_return,
  // relative to a list of nodes
  has_smallest_depth,
  has_largest_depth,
  has_best_path,
  has_most_branches,
  has_child_highest_value,
  has_child_lowest_value,
  has_parent_highest_value,
  has_parent_lowest_value,
  has_leaf_highest_value,
  has_leaf_lowest_value,
  has_root_highest_value,
  has_root_lowest_value,
  // higher order
  among,
  all,
};

inline constexpr int kAtomCount = static_cast<int>(Atom::all) + 1;

enum class Scope : std::uint8_t { node, state, list, higher };

struct AtomInfo {
  std::string_view name;
  Scope scope;
  bool has_int_arg;
};

const AtomInfo& info(Atom a);
/// Canonical names and the accepted aliases.
std::optional<Atom> atom_by_name(std::string_view name);
const std::vector<Atom>& all_atoms();

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// An atom application, possibly negated.
struct Literal {
  Atom atom = Atom::is_observed;
  int arg = 0;                          // depth, count or return threshold
  bool negated = false;
  ExprPtr inner;                        // among / all
  std::optional<Atom> selector;         // list predicate applied inside among / all

  bool operator==(const Literal& o) const;
};

/// Conjunction of one or more literals. A single literal is an atom or its
/// negation. Conjunct order is significant for identity.
struct Expr {
  std::vector<Literal> conjuncts;

  bool operator==(const Expr& o) const { return conjuncts == o.conjuncts; }
};

ExprPtr make_literal(Literal l);
ExprPtr make_atom(Atom a, int arg = 0);
ExprPtr make_not(Atom a, int arg = 0);
ExprPtr make_and(std::vector<Literal> conjuncts);
ExprPtr make_among(ExprPtr inner, std::optional<Atom> selector = std::nullopt);
ExprPtr make_all(ExprPtr inner, Atom selector);

std::string to_string(const Expr& e);
std::string to_string(const Literal& l);
/// Throws SyntaxError or UnknownAtom.
ExprPtr parse(std::string_view text);

/// Number of atom occurrences, counting among / all wrappers.
int atom_count(const Expr& e);
/// True when no literal depends on the given node.
bool is_state_level(const Expr& e);
/// Equality that treats conjunctions as sets.
bool equivalent_modulo_order(const Expr& a, const Expr& b);

/// Quantities derived from a belief, shared by every predicate evaluated on it.
class StateContext {
 public:
  explicit StateContext(const BeliefState& b);

  const BeliefState& belief() const { return *b_; }
  const TreeLayout& layout() const { return *lay_; }

  NodeMask atom_mask(Atom a) const { return atom_masks_[static_cast<std::size_t>(a)]; }
  bool state_value(Atom a, int arg) const;
  NodeMask select(Atom selector, NodeMask candidates) const;

  double path_through(NodeId n) const { return through_[static_cast<std::size_t>(n)]; }
  double best_path_value() const { return best_; }

 private:
  const BeliefState* b_;
  const TreeLayout* lay_;
  const RewardConfig* rw_;
  std::vector<double> through_;
  double best_ = 0.0;
  std::vector<NodeMask> atom_masks_;
  // per-node keys for list predicates, NaN when undefined
  std::vector<double> child_max_, child_min_, parent_val_, leaf_max_, leaf_min_, root_val_;
  std::vector<double> path_count_;
};

/// Mask over computations (bit 0 is terminate) satisfying the expression.
NodeMask eval_mask(const Expr& e, const StateContext& ctx);
NodeMask eval_mask(const Literal& l, const StateContext& ctx);
bool eval(const BeliefState& b, Computation c, const Expr& e);
/// True when some computation satisfies the expression. For state-level
/// expressions this is simply their truth value.
bool holds_in_state(const Expr& e, const StateContext& ctx);

/// Context-free grammar over expression text. Upper-case tokens that name
/// a left-hand side are non-terminals; everything else is literal text.
struct Grammar {
  std::string start = "START";
  std::map<std::string, std::vector<std::string>> productions;

  /// Rules in "LHS -> alt | alt" form, one per line. Repeated left-hand
  /// sides append productions.
  static Grammar parse(std::string_view text);
  static const Grammar& standard();
};

struct CatalogEntry {
  ExprPtr expr;
  std::string text;
  double prior = 0.0;
  double log_prior = 0.0;
};

/// Bulk evaluator: every distinct sub-expression of the catalog is
/// evaluated once per state.
class CompiledSet {
 public:
  CompiledSet() = default;
  explicit CompiledSet(const std::vector<ExprPtr>& exprs);

  std::size_t size() const { return roots_.size(); }
  /// out[i] = eval_mask(exprs[i], ctx)
  void eval_all(const StateContext& ctx, std::vector<NodeMask>& out) const;

 private:
  enum class OpKind : std::uint8_t { literal, select_among, all_check, conj };
  struct Op {
    OpKind kind;
    Literal lit;                 // literal
    std::vector<int> operands;   // conj: literal ops; among/all: conj op
  };
  int intern_conj(const Expr& e);
  int intern_literal(const Literal& l);

  std::vector<Op> ops_;
  std::vector<int> roots_;
  std::unordered_map<std::string, int> index_;
  mutable std::vector<NodeMask> scratch_;
};

class Catalog {
 public:
  /// Enumerate every derivation of the grammar. Duplicate expressions are
  /// merged with summed probability. Throws GrammarCycle.
  static Catalog enumerate(const Grammar& g);
  static const Catalog& standard();

  std::size_t size() const { return entries_.size(); }
  const CatalogEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  std::optional<std::size_t> find(const std::string& text) const;
  std::vector<ExprPtr> exprs() const;
  /// A sub-catalog with the given entries, priors unchanged.
  Catalog subset(const std::vector<std::size_t>& idx) const;
  const CompiledSet& compiled() const;

 private:
  std::vector<CatalogEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_text_;
  mutable std::shared_ptr<CompiledSet> compiled_;
};

/// Predicates allowed in until / unless conditions: general predicates plus
/// is_max_in_branch and are_branch_leaves_observed.
std::vector<ExprPtr> allowed_condition_predicates(const Grammar& g = Grammar::standard());
/// Predicates stripped before the procedural transform: all all(...)
/// expressions of the catalog and every allowed condition predicate.
std::vector<ExprPtr> redundant_predicates(const Catalog& c, const Grammar& g = Grammar::standard());

}  // namespace stratdisc::dsl
