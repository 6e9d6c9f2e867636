// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cmath>
#include <limits>

#include "stratdisc/dsl.hpp"

namespace stratdisc::dsl {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTie = 1e-9;

template <typename F>
void for_bits(NodeMask m, F f) {
  while (m != 0) {
    f(std::countr_zero(m));
    m &= m - 1;
  }
}

}  // namespace

StateContext::StateContext(const BeliefState& b)
    : b_(&b), lay_(&b.env().layout()), rw_(&b.env().rewards()) {
  const TreeLayout& L = *lay_;
  const std::size_t n = L.node_count();
  const NodeMask obs = b.observed_mask() & L.node_mask;
  auto val = [&](int i) { return b.value(i); };
  auto lvl = [&](int i) { return L.level[static_cast<std::size_t>(i)]; };

  through_.assign(n, -HUGE_VAL);
  best_ = -HUGE_VAL;
  NodeMask max_branch = 0, max2_branch = 0, best_paths = 0;
  std::vector<double> pv(L.paths.size());
  for (std::size_t p = 0; p < L.paths.size(); ++p) {
    double v = 0.0;
    int maxes = 0;
    NodeMask members = 0;
    for (int m : L.paths[p]) {
      v += b.expected_value(m);
      members |= bit(m);
      if (b.observed(m) && val(m) == rw_->global_max) ++maxes;
    }
    pv[p] = v;
    if (v > best_) best_ = v;
    if (maxes >= 1) max_branch |= members;
    if (maxes >= 2) max2_branch |= members;
    for (int m : L.paths[p])
      if (v > through_[static_cast<std::size_t>(m)]) through_[static_cast<std::size_t>(m)] = v;
  }
  for (std::size_t p = 0; p < L.paths.size(); ++p)
    if (pv[p] >= best_ - kTie)
      for (int m : L.paths[p]) best_paths |= bit(m);

  atom_masks_.assign(kAtomCount, 0);
  auto set = [&](Atom a, NodeMask m) { atom_masks_[static_cast<std::size_t>(a)] = m; };
  set(Atom::is_observed, obs);
  set(Atom::is_leaf, L.leaf_mask);
  set(Atom::is_root, L.root_mask);
  set(Atom::is_max_in_branch, max_branch);
  set(Atom::is_2max_in_branch, max2_branch);
  set(Atom::is_on_highest_expected_value_path, best_paths);

  child_max_.assign(n, kNaN);
  child_min_.assign(n, kNaN);
  parent_val_.assign(n, kNaN);
  leaf_max_.assign(n, kNaN);
  leaf_min_.assign(n, kNaN);
  root_val_.assign(n, kNaN);
  path_count_.assign(n, 0.0);

  NodeMask branch_leaves = 0, leaf_hi = 0, leaf_lo = 0, root_hi = 0, root_lo = 0, par_hi = 0,
           par_lo = 0, ch_hi = 0, ch_lo = 0, anc_max = 0, succ_max = 0;
  auto is_max_at = [&](int m) { return b.observed(m) && val(m) == rw_->max_value[static_cast<std::size_t>(lvl(m))]; };
  auto is_min_at = [&](int m) { return b.observed(m) && val(m) == rw_->min_value[static_cast<std::size_t>(lvl(m))]; };
  auto is_global_max = [&](int m) { return b.observed(m) && val(m) == rw_->global_max; };

  for (std::size_t i = 1; i < n; ++i) {
    const int id = static_cast<int>(i);
    const NodeMask lm = L.leaf_descendants[i];
    if (!L.is_leaf(id) && (lm & ~obs) == 0) branch_leaves |= bit(id);
    path_count_[i] = L.is_leaf(id) ? 1.0 : static_cast<double>(std::popcount(lm));

    for_bits(lm, [&](int leaf) {
      if (is_max_at(leaf)) leaf_hi |= bit(id);
      if (is_min_at(leaf)) leaf_lo |= bit(id);
      if (b.observed(leaf)) {
        const double v = val(leaf);
        double& hi = leaf_max_[i];
        double& lo = leaf_min_[i];
        if (std::isnan(hi) || v > hi) hi = v;
        if (std::isnan(lo) || v < lo) lo = v;
      }
    });

    const int root = L.root_of(id);
    if (is_max_at(root)) root_hi |= bit(id);
    if (is_min_at(root)) root_lo |= bit(id);
    if (root != id && b.observed(root)) root_val_[i] = val(root);

    const int par = L.parent[i];
    if (par > 0) {
      if (is_max_at(par)) par_hi |= bit(id);
      if (is_min_at(par)) par_lo |= bit(id);
      if (b.observed(par)) parent_val_[i] = val(par);
    }

    for (int c : L.children[i]) {
      if (is_max_at(c)) ch_hi |= bit(id);
      if (is_min_at(c)) ch_lo |= bit(id);
      if (b.observed(c)) {
        const double v = val(c);
        if (std::isnan(child_max_[i]) || v > child_max_[i]) child_max_[i] = v;
        if (std::isnan(child_min_[i]) || v < child_min_[i]) child_min_[i] = v;
      }
    }

    for_bits(L.ancestors[i], [&](int a) {
      if (is_global_max(a)) anc_max |= bit(id);
    });
    for_bits(L.descendants[i], [&](int d) {
      if (is_global_max(d)) succ_max |= bit(id);
    });
  }
  set(Atom::are_branch_leaves_observed, branch_leaves);
  set(Atom::has_leaf_highest_level_value, leaf_hi);
  set(Atom::has_leaf_lowest_level_value, leaf_lo);
  set(Atom::has_root_highest_level_value, root_hi);
  set(Atom::has_root_lowest_level_value, root_lo);
  set(Atom::has_parent_highest_level_value, par_hi);
  set(Atom::has_parent_lowest_level_value, par_lo);
  set(Atom::has_child_highest_level_value, ch_hi);
  set(Atom::has_child_lowest_level_value, ch_lo);
  set(Atom::is_ancestor_max_val, anc_max);
  set(Atom::is_successor_max_val, succ_max);

  NodeMask prev_parent = 0, prev_sibling = 0;
  if (const auto last = b.last_clicked()) {
    for (int c : L.children[static_cast<std::size_t>(*last)]) prev_parent |= bit(c);
    prev_sibling = L.siblings[static_cast<std::size_t>(*last)];
  }
  set(Atom::is_previous_observed_parent, prev_parent);
  set(Atom::is_previous_observed_sibling, prev_sibling);
}

bool StateContext::state_value(Atom a, int arg) const {
  const BeliefState& b = *b_;
  const TreeLayout& L = *lay_;
  const NodeMask obs = b.observed_mask() & L.node_mask;
  const auto last = b.last_clicked();
  const int lv = last ? b.value(*last) : 0;
  const int ll = last ? L.level[static_cast<std::size_t>(*last)] : 0;
  switch (a) {
    case Atom::are_leaves_observed:
      return (L.leaf_mask & ~obs) == 0;
    case Atom::are_roots_observed:
      return (L.root_mask & ~obs) == 0;
    case Atom::is_positive_observed: {
      bool any = false;
      for_bits(obs, [&](int i) { any = any || b.value(i) > 0; });
      return any;
    }
    case Atom::is_previous_observed_max:
      return last && lv == rw_->global_max;
    case Atom::is_previous_observed_positive:
      return last && lv > 0;
    case Atom::is_previous_observed_min:
      return last && lv == rw_->global_min;
    case Atom::is_previous_observed_max_nonleaf:
      return last && !L.is_leaf(*last) && lv == rw_->global_max;
    case Atom::is_previous_observed_max_leaf:
      return last && L.is_leaf(*last) && lv == rw_->global_max;
    case Atom::is_previous_observed_max_root:
      return last && ll == 1 && lv == rw_->global_max;
    case Atom::is_previous_observed_max_level:
      return last && ll == arg && lv == rw_->max_value[static_cast<std::size_t>(ll)];
    case Atom::is_previous_observed_min_level:
      return last && ll == arg && lv == rw_->min_value[static_cast<std::size_t>(ll)];
    case Atom::observed_count:
      return b.clicks() >= arg;
    case Atom::termination_return:
      return best_ >= static_cast<double>(arg) - kTie;
    default:
      return false;
  }
}

NodeMask StateContext::select(Atom selector, NodeMask candidates) const {
  candidates &= lay_->node_mask;
  const std::vector<double>* keys = nullptr;
  bool want_max = true;
  std::vector<double> level_keys;
  switch (selector) {
    case Atom::has_smallest_depth:
    case Atom::has_largest_depth:
      level_keys.assign(lay_->level.begin(), lay_->level.end());
      keys = &level_keys;
      want_max = selector == Atom::has_largest_depth;
      break;
    case Atom::has_best_path:
      keys = &through_;
      break;
    case Atom::has_most_branches:
      keys = &path_count_;
      break;
    case Atom::has_child_highest_value:
      keys = &child_max_;
      break;
    case Atom::has_child_lowest_value:
      keys = &child_min_;
      want_max = false;
      break;
    case Atom::has_parent_highest_value:
      keys = &parent_val_;
      break;
    case Atom::has_parent_lowest_value:
      keys = &parent_val_;
      want_max = false;
      break;
    case Atom::has_leaf_highest_value:
      keys = &leaf_max_;
      break;
    case Atom::has_leaf_lowest_value:
      keys = &leaf_min_;
      want_max = false;
      break;
    case Atom::has_root_highest_value:
      keys = &root_val_;
      break;
    case Atom::has_root_lowest_value:
      keys = &root_val_;
      want_max = false;
      break;
    default:
      return 0;
  }
  double best = kNaN;
  for_bits(candidates, [&](int i) {
    const double k = (*keys)[static_cast<std::size_t>(i)];
    if (std::isnan(k)) return;
    if (std::isnan(best) || (want_max ? k > best : k < best)) best = k;
  });
  if (std::isnan(best)) return 0;
  NodeMask out = 0;
  for_bits(candidates, [&](int i) {
    const double k = (*keys)[static_cast<std::size_t>(i)];
    if (!std::isnan(k) && std::fabs(k - best) <= kTie) out |= bit(i);
  });
  return out;
}

NodeMask eval_mask(const Literal& l, const StateContext& ctx) {
  const TreeLayout& L = ctx.layout();
  const AtomInfo& ai = info(l.atom);
  switch (ai.scope) {
    case Scope::node: {
      NodeMask m;
      if (l.atom == Atom::depth)
        m = l.arg >= 1 && l.arg <= L.max_level ? L.level_nodes[static_cast<std::size_t>(l.arg)] : 0;
      else
        m = ctx.atom_mask(l.atom);
      return l.negated ? (L.node_mask & ~m) : m;
    }
    case Scope::state: {
      const bool v = ctx.state_value(l.atom, l.arg) != l.negated;
      return v ? L.all_mask : 0;
    }
    case Scope::list: {
      const NodeMask m = ctx.select(l.atom, L.node_mask);
      return l.negated ? (L.node_mask & ~m) : m;
    }
    case Scope::higher: {
      NodeMask s = (l.inner ? eval_mask(*l.inner, ctx) : L.all_mask) & L.node_mask;
      if (l.atom == Atom::among) {
        if (l.selector) s = ctx.select(*l.selector, s);
        return l.negated ? (L.node_mask & ~s) : s;
      }
      const NodeMask t = l.selector ? ctx.select(*l.selector, s) : s;
      const bool v = (t == s) != l.negated;
      return v ? L.all_mask : 0;
    }
  }
  return 0;
}

NodeMask eval_mask(const Expr& e, const StateContext& ctx) {
  NodeMask m = ctx.layout().all_mask;
  for (const auto& l : e.conjuncts) {
    m &= eval_mask(l, ctx);
    if (m == 0) break;
  }
  return m;
}

bool eval(const BeliefState& b, Computation c, const Expr& e) {
  StateContext ctx(b);
  return ((eval_mask(e, ctx) >> c) & 1U) != 0;
}

bool holds_in_state(const Expr& e, const StateContext& ctx) { return eval_mask(e, ctx) != 0; }

CompiledSet::CompiledSet(const std::vector<ExprPtr>& exprs) {
  roots_.reserve(exprs.size());
  for (const auto& e : exprs) roots_.push_back(intern_conj(*e));
  scratch_.resize(ops_.size());
}

int CompiledSet::intern_literal(const Literal& l) {
  const std::string key = "L" + to_string(l);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  Op op;
  if (l.atom == Atom::among || l.atom == Atom::all) {
    const int inner = l.inner ? intern_conj(*l.inner) : -1;
    op.kind = l.atom == Atom::among ? OpKind::select_among : OpKind::all_check;
    op.operands = {inner};
  } else {
    op.kind = OpKind::literal;
  }
  op.lit = l;
  op.lit.inner.reset();
  const int id = static_cast<int>(ops_.size());
  ops_.push_back(std::move(op));
  index_.emplace(key, id);
  return id;
}

int CompiledSet::intern_conj(const Expr& e) {
  if (e.conjuncts.size() == 1) return intern_literal(e.conjuncts.front());
  const std::string key = "C" + to_string(e);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  Op op;
  op.kind = OpKind::conj;
  for (const auto& l : e.conjuncts) op.operands.push_back(intern_literal(l));
  const int id = static_cast<int>(ops_.size());
  ops_.push_back(std::move(op));
  index_.emplace(key, id);
  return id;
}

void CompiledSet::eval_all(const StateContext& ctx, std::vector<NodeMask>& out) const {
  const TreeLayout& L = ctx.layout();
  auto& v = scratch_;
  v.resize(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    switch (op.kind) {
      case OpKind::literal:
        v[i] = eval_mask(op.lit, ctx);
        break;
      case OpKind::select_among: {
        NodeMask s = (op.operands[0] >= 0 ? v[static_cast<std::size_t>(op.operands[0])] : L.all_mask) & L.node_mask;
        if (op.lit.selector) s = ctx.select(*op.lit.selector, s);
        v[i] = op.lit.negated ? (L.node_mask & ~s) : s;
        break;
      }
      case OpKind::all_check: {
        const NodeMask s = (op.operands[0] >= 0 ? v[static_cast<std::size_t>(op.operands[0])] : L.all_mask) & L.node_mask;
        const NodeMask t = op.lit.selector ? ctx.select(*op.lit.selector, s) : s;
        v[i] = ((t == s) != op.lit.negated) ? L.all_mask : 0;
        break;
      }
      case OpKind::conj: {
        NodeMask m = L.all_mask;
        for (int o : op.operands) m &= v[static_cast<std::size_t>(o)];
        v[i] = m;
        break;
      }
    }
  }
  out.resize(roots_.size());
  for (std::size_t r = 0; r < roots_.size(); ++r) out[r] = v[static_cast<std::size_t>(roots_[r])];
}

}  // namespace stratdisc::dsl
