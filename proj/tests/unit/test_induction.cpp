// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cmath>

#include "doctest.h"
#include "stratdisc/errors.hpp"
#include "stratdisc/induction.hpp"
#include "stratdisc/rng.hpp"

using namespace stratdisc;

namespace {

Dnf single(const std::string& text) {
  Dnf d;
  Conjunction c;
  c.preds.push_back(dsl::parse(text));
  d.conjunctions.push_back(c);
  return d;
}

Dnf true_dnf() {
  Dnf d;
  d.conjunctions.emplace_back();
  return d;
}

const char* kLeaves = "among(not(is_observed) and is_leaf)";

RowSet rowset(const DemoSet& demos, bool positive) {
  RowSet s((demos.rows.size() + 63) / 64, 0);
  for (std::size_t r = 0; r < demos.rows.size(); ++r)
    if (demos.rows[r].positive == positive && !demos.rows[r].implicit) s[r / 64] |= std::uint64_t{1} << (r % 64);
  return s;
}

bool in(const RowSet& s, std::size_t r) { return (s[r / 64] >> (r % 64)) & 1U; }

// Rows accepted by a DNF over catalog columns.
bool accepts(const DnfIndices& f, const ValuationMatrix& vm, std::size_t r) {
  for (const auto& c : f.conjunctions) {
    bool all = true;
    for (auto p : c) all = all && vm.get(r, p);
    if (all) return true;
  }
  return false;
}

// First click picks a mode: leaves when a leaf is observed, roots when a root is.
class TwoModes : public StatelessPolicy {
 public:
  void distribution(const BeliefState& b, ActionDistribution& out) const override {
    const auto& L = b.env().layout();
    const NodeMask open = b.legal_mask() & L.node_mask;
    NodeMask m;
    if (b.observed_mask() & L.leaf_mask)
      m = open & L.leaf_mask;
    else if (b.observed_mask() & L.root_mask)
      m = open & L.root_mask;
    else
      m = open & (L.leaf_mask | L.root_mask);
    if (m == 0) m = bit(kTerminate);
    out.clear();
    for (; m; m &= m - 1) out.actions.push_back(std::countr_zero(m));
    out.probs.assign(out.actions.size(), 1.0 / static_cast<double>(out.actions.size()));
  }
};

}  // namespace

TEST_CASE("formula policy") {
  const auto env = Environment::standard();
  const BeliefState b(env);
  ActionDistribution d;
  FormulaPolicy(Dnf{}).distribution(b, d);
  CHECK(d.actions == std::vector<Computation>{kTerminate});
  FormulaPolicy(true_dnf()).distribution(b, d);
  CHECK(d.actions.size() == 13);
  FormulaPolicy(single(kLeaves)).distribution(b, d);
  CHECK(d.actions.size() == 6);
  CHECK(d.probs.front() == doctest::Approx(1.0 / 6.0));
  CHECK(to_string(Dnf{}) == "False");
  CHECK(to_string(true_dnf()) == "True");
  CHECK(to_string(single(kLeaves)) == kLeaves);

  Rng t(1), a(2);
  const auto r = rollout(env, FormulaPolicy(single(kLeaves)), t, a);
  CHECK(r.trajectory.clicks.size() == 6);
  for (auto c : r.trajectory.clicks) CHECK(env.layout().is_leaf(c));
}

TEST_CASE("demonstrations") {
  const auto env = Environment::standard();
  const auto stop = generate_demonstrations(env, FormulaPolicy(Dnf{}), 3, 1);
  CHECK(stop.states.size() == 1);
  CHECK(stop.trajectories.size() == 3);
  std::size_t pos = 0, neg = 0;
  for (const auto& r : stop.rows) {
    if (r.positive) {
      ++pos;
      CHECK(r.implicit);
      CHECK(r.action == kTerminate);
    } else {
      ++neg;
    }
  }
  CHECK(pos == 3);
  CHECK(neg == 12);

  const auto leaves = generate_demonstrations(env, FormulaPolicy(single(kLeaves)), 20, 2);
  pos = neg = 0;
  for (const auto& r : leaves.rows) {
    const bool leaf = env.layout().is_leaf(r.action);
    if (r.positive) {
      ++pos;
      CHECK((leaf || r.action == kTerminate));
      CHECK(r.implicit == (r.action == kTerminate));
    } else {
      ++neg;
      CHECK(!leaf);
    }
  }
  CHECK(pos == 20 * 7);
  CHECK(neg <= 10 * pos);

  // negatives are capped at the given multiple of the positives
  const auto capped = generate_demonstrations(env, FormulaPolicy(single(kLeaves)), 20, 2, 0.5);
  std::size_t cneg = 0;
  for (const auto& r : capped.rows) cneg += !r.positive;
  CHECK(cneg == 70);
}

TEST_CASE("divergence identities") {
  const auto env = Environment::standard();
  const FormulaPolicy leaves(single(kLeaves));
  CHECK(divergence(env, leaves, leaves, 39.97, 10000, 3) <= 0.01);
  const FormulaPolicy nothing{Dnf{}};
  CHECK(divergence(env, leaves, nothing, 39.97, 1000, 3) == 0.0);  // clamped below at 0

  // zero-reward formula against a cluster earning the expert reward
  const double expert = estimate_expected_reward(env, leaves, 10000, 99).mean;
  REQUIRE(expert > 0.0);
  CHECK(divergence(env, nothing, leaves, expert, 10000, 3) == doctest::Approx(1.0).epsilon(0.02));
  CHECK_THROWS_AS(divergence(env, nothing, leaves, 0.0, 10, 3), ConfigError);
}

TEST_CASE("learn_dnf separates a describable policy") {
  const auto env = Environment::standard();
  const auto& cat = dsl::Catalog::standard();
  const auto demos = generate_demonstrations(env, FormulaPolicy(single(kLeaves)), 30, 4);
  const ValuationMatrix vm(demos, cat);
  CHECK(vm.rows() == demos.rows.size());
  CHECK(vm.cols() == cat.size());
  const RowSet pos = rowset(demos, true), neg = rowset(demos, false);
  const auto lr = learn_dnf(vm, cat, pos, neg, LearnConfig{});
  CHECK(lr.covered == lr.positives);
  for (std::size_t r = 0; r < vm.rows(); ++r) {
    if (in(neg, r)) CHECK(!accepts(lr.dnf, vm, r));
    if (in(pos, r)) CHECK(accepts(lr.dnf, vm, r));
  }
  CHECK(dnf_log_posterior(lr.dnf, vm, cat, pos, neg, LearnConfig{}) == doctest::Approx(lr.log_posterior));
}

TEST_CASE("learn_dnf without a separator") {
  const auto env = Environment::standard();
  const auto& cat = dsl::Catalog::standard();
  DemoSet d;
  d.states.emplace_back(env);
  d.rows.push_back({0, 3, true, false});
  d.rows.push_back({0, 3, false, false});
  const ValuationMatrix vm(d, cat);
  CHECK_THROWS_AS(learn_dnf(vm, cat, rowset(d, true), rowset(d, false), LearnConfig{}), NoSeparator);
}

TEST_CASE("learn_dnf matches exhaustive search on a small catalog") {
  const auto env = Environment::standard();
  const auto& full = dsl::Catalog::standard();
  std::vector<std::size_t> idx;
  for (const char* t : {"is_leaf", "not(is_observed)", "is_root", "not(is_root)", "among(depth(2))", "is_2max_in_branch",
                        "is_max_in_branch", kLeaves, "among(not(is_observed) and is_root)", "are_leaves_observed",
                        "is_previous_observed_max", "not(is_leaf)"}) {
    const auto i = full.find(t);
    INFO(t);
    REQUIRE(i.has_value());
    idx.push_back(*i);
  }
  const auto cat = full.subset(idx);
  LearnConfig cfg;
  for (const auto& text : {std::string(kLeaves), std::string("not(is_observed) and is_root")}) {
    Dnf target;
    Conjunction c;
    for (const auto& part : {text}) c.preds.push_back(dsl::parse(part));
    target.conjunctions.push_back(c);
    const auto demos = generate_demonstrations(env, FormulaPolicy(target), 15, 6);
    const ValuationMatrix vm(demos, cat);
    const RowSet pos = rowset(demos, true), neg = rowset(demos, false);

    // every DNF of at most two conjunctions of at most two predicates
    std::vector<std::vector<std::size_t>> conj;
    for (std::size_t a = 0; a < cat.size(); ++a) {
      conj.push_back({a});
      for (std::size_t b = a + 1; b < cat.size(); ++b) conj.push_back({a, b});
    }
    double best = -HUGE_VAL;
    for (std::size_t i = 0; i < conj.size(); ++i) {
      best = std::max(best, dnf_log_posterior(DnfIndices{{conj[i]}}, vm, cat, pos, neg, cfg));
      for (std::size_t j = i + 1; j < conj.size(); ++j)
        best = std::max(best, dnf_log_posterior(DnfIndices{{conj[i], conj[j]}}, vm, cat, pos, neg, cfg));
    }
    const auto lr = learn_dnf(vm, cat, pos, neg, cfg);
    INFO(text);
    CHECK(lr.log_posterior >= best - 1e-9);
  }
}

TEST_CASE("ai_interpret reproduces the demonstrated actions") {
  const auto env = Environment::standard();
  const auto& cat = dsl::Catalog::standard();
  const FormulaPolicy leaves(single(kLeaves));
  const auto demos = generate_demonstrations(env, leaves, 40, 8);
  InterpretConfig cfg;
  cfg.num_rollouts = 2000;
  const auto res = ai_interpret(env, cat, demos, leaves, cfg);
  CHECK(res.divergence <= cfg.max_divergence);
  CHECK(res.coverage >= 1.0 - cfg.ai_tolerance);
  CHECK(res.used_fraction == 1.0);
  for (const auto& row : demos.rows) {
    const dsl::StateContext ctx(demos.states[row.state]);
    const bool ok = (eval_mask(res.dnf, ctx) >> row.action) & 1U;
    if (!row.positive) CHECK(!ok);
  }
  // the formula's own policy earns what the demonstrations earn
  CHECK(divergence(env, FormulaPolicy(res.dnf), leaves, cfg.expert_reward, 2000, 1) <= 0.05);

  // a no-click cluster gets the empty disjunction
  const FormulaPolicy nothing{Dnf{}};
  const auto none = ai_interpret(env, cat, generate_demonstrations(env, nothing, 10, 1), nothing, cfg);
  CHECK(none.dnf.conjunctions.empty());
  CHECK(none.divergence == 0.0);
}

TEST_CASE("ai_interpret with a tolerant divergence bound") {
  const auto env = Environment::standard();
  const auto& cat = dsl::Catalog::standard();
  const TwoModes policy;
  const auto demos = generate_demonstrations(env, policy, 40, 3);
  InterpretConfig cfg;
  cfg.num_rollouts = 1000;
  cfg.max_divergence = 1.0;
  const auto res = ai_interpret(env, cat, demos, policy, cfg);
  CHECK(res.divergence <= 1.0);
  CHECK(res.used_fraction > 0.0);
  CHECK(res.used_fraction <= 1.0);
  for (const auto& row : demos.rows) {
    if (row.positive) continue;
    const dsl::StateContext ctx(demos.states[row.state]);
    CHECK(!((eval_mask(res.dnf, ctx) >> row.action) & 1U));
  }
}

TEST_CASE("hamming clusters") {
  std::vector<std::vector<std::uint64_t>> rows;
  for (int i = 0; i < 5; ++i) rows.push_back({0x0fULL | (std::uint64_t(i) << 8)});
  for (int i = 0; i < 4; ++i) rows.push_back({0xff00000000ULL | (std::uint64_t(i) << 50)});
  const auto lab = hamming_clusters(rows, 2);
  REQUIRE(lab.size() == 9);
  for (int i = 1; i < 5; ++i) CHECK(lab[i] == lab[0]);
  for (int i = 6; i < 9; ++i) CHECK(lab[i] == lab[5]);
  CHECK(lab[0] != lab[5]);
  CHECK(hamming_clusters(rows, 1) == std::vector<std::size_t>(9, 0));
  CHECK(hamming_clusters({}, 3).empty());
}

TEST_CASE("DNF JSON round trip") {
  Dnf d = single(kLeaves);
  Conjunction two;
  two.preds = {dsl::parse("is_root"), dsl::parse("not(is_observed)")};
  d.conjunctions.push_back(two);
  const auto back = dnf_from_json(to_json(d));
  CHECK(to_string(back) == to_string(d));
  CHECK(to_string(dnf_from_json(to_json(Dnf{}))) == "False");
}
