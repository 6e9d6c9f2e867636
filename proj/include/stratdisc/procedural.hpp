// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stratdisc/clustering.hpp"
#include "stratdisc/induction.hpp"

namespace stratdisc {

/// A single allowed predicate or a disjunction of two.
struct Condition {
  std::vector<dsl::ExprPtr> disjuncts;
};

std::string to_string(const Condition& c);
bool holds(const Condition& c, const dsl::StateContext& ctx);

enum class StepKind {
  once,   // one click satisfying the conjunction, then the next step
  hold,   // repeat while some action satisfies the conjunction
  until,  // repeat until the condition holds
};

struct Step {
  Conjunction conj;
  StepKind kind = StepKind::hold;
  Condition until;                 // used when kind == until
  std::optional<Condition> unless;  // stop everything when it holds
};

/// Steps joined by NEXT, optionally ending in a jump back to loop_target.
struct ProceduralFormula {
  std::vector<Step> steps;
  std::optional<std::size_t> loop_target;
  std::optional<Condition> loop_unless;
};

/// Surface syntax: steps joined by " AND NEXT ", "X UNTIL c", "X UNTIL IT
/// STOPS APPLYING", " UNLESS c", " GO TO <target step conjunction>".
std::string to_string(const ProceduralFormula& f);
/// Inverse of to_string. "UNTIL IT APPLIES" is read as the hold form too.
/// Throws SyntaxError or UnknownAtom.
ProceduralFormula parse_procedural(std::string_view text);

/// Atom occurrences over conjunctions, conditions and the jump target;
/// a True or False conjunction counts as one.
int complexity(const ProceduralFormula& f);

/// Structural check: at least one step, until steps carry a condition of
/// one or two predicates, the loop target is a valid step.
bool well_formed(const ProceduralFormula& f, std::string* why = nullptr);

ProceduralFormula hold_formula(Conjunction c);
bool equivalent_modulo_order(const ProceduralFormula& a, const ProceduralFormula& b);

/// Where the step machine stands in a belief: the step whose conjunction
/// applies and the actions it allows (terminate alone once finished).
struct Resolution {
  std::size_t step = 0;
  NodeMask allowed = 0;
  bool finished = false;
};

Resolution resolve(const ProceduralFormula& f, const dsl::StateContext& ctx, std::size_t step);
/// Step index to use after taking action a from resolution r.
std::size_t next_step(const ProceduralFormula& f, const Resolution& r);

/// Uniform over the actions allowed by the current step.
class LtlPolicy : public Policy {
 public:
  explicit LtlPolicy(ProceduralFormula f) : f_(std::move(f)) {}
  std::unique_ptr<PolicyRun> start() const override;
  const ProceduralFormula& formula() const { return f_; }
  /// Step index in effect at every operation of a trajectory.
  std::vector<std::size_t> step_indices(const Environment& env, const Trajectory& t) const;

 private:
  ProceduralFormula f_;
};

/// Replayed trajectories with a state context per operation, so that
/// formulas can be scored repeatedly without rebuilding beliefs.
class OpCache {
 public:
  OpCache(const Environment& env, const std::vector<Trajectory>& trajs);
  OpCache(const OpCache&) = delete;
  OpCache& operator=(const OpCache&) = delete;

  std::size_t num_trajectories() const { return begin_.size() - 1; }
  std::size_t begin(std::size_t t) const { return begin_[t]; }
  std::size_t end(std::size_t t) const { return begin_[t + 1]; }
  const dsl::StateContext& ctx(std::size_t op) const { return ctx_[op]; }
  Computation action(std::size_t op) const { return actions_[op]; }

 private:
  std::deque<BeliefState> beliefs_;
  std::vector<dsl::StateContext> ctx_;
  std::vector<Computation> actions_;
  std::vector<std::size_t> begin_;
};

/// Epsilon-error likelihood of trajectories under a formula, epsilon at its MLE.
struct EpsilonFit {
  double log_likelihood = 0.0;
  double epsilon = 0.0;
  EpsilonStats stats;
};

EpsilonFit epsilon_fit(const ProceduralFormula& f, const OpCache& ops,
                       const std::vector<std::size_t>* subset = nullptr);
EpsilonFit epsilon_fit(const Environment& env, const Policy& policy, const std::vector<Trajectory>& trajs);

/// Lowest index of a conjunction accepting each operation's action, -1 if none.
std::vector<int> conjunction_labels(const Dnf& dnf, const OpCache& ops, std::size_t t);
/// Run-length compressed labels with unexplained operations dropped.
std::vector<std::size_t> conjunction_trace(const Dnf& dnf, const OpCache& ops, std::size_t t);
std::vector<std::size_t> conjunction_trace(const Environment& env, const Trajectory& t, const Dnf& dnf);

struct TransitionGraph {
  std::set<std::size_t> nodes;
  std::set<std::pair<std::size_t, std::size_t>> edges;
};

TransitionGraph build_transition_graph(const std::vector<std::vector<std::size_t>>& traces);

/// Conjunction sequence, optionally ending in a jump to the element `loop`.
struct ClassSequence {
  std::vector<std::size_t> seq;
  std::optional<std::size_t> loop;  // conjunction index jumped to

  bool operator==(const ClassSequence& o) const { return seq == o.seq && loop == o.loop; }
};

std::string to_string(const ClassSequence& c);
/// Maximal simple paths, longest first then lexicographic.
std::vector<ClassSequence> max_sequences(const TransitionGraph& g);
/// Position in the class of every trace element when the trace is a
/// subsequence of the class sequence with its loop unrolled, else nullopt.
std::optional<std::vector<std::size_t>> match_class(const ClassSequence& c,
                                                    const std::vector<std::size_t>& trace);

/// Beliefs while a step was active and the belief at which it ended.
struct Segment {
  std::vector<std::size_t> during;  // op indices into an OpCache
  std::size_t at = 0;
};

/// Candidate conditions false throughout and true at the end of at least
/// (1 - threshold) of the segments: single predicates and two-way
/// disjunctions. Order: singles first, then disjunctions, each lexicographic.
std::vector<Condition> candidate_conditions(const std::vector<Segment>& segments, const OpCache& ops,
                                            const std::vector<dsl::ExprPtr>& allowed, double threshold);

/// Best candidate by score (higher wins); ties go to single predicates and
/// then to the lexicographically smaller text. Throws NoCondition.
Condition find_condition(const std::vector<Segment>& segments, const OpCache& ops,
                         const std::vector<dsl::ExprPtr>& allowed, double threshold,
                         const std::function<double(const Condition&)>& score);

struct TransformConfig {
  double threshold = 0.5;
};

struct TransformResult {
  std::vector<ProceduralFormula> class_formulas;
  std::vector<ClassSequence> classes;
  std::vector<std::vector<std::size_t>> members;  // trajectory indices per class
  bool stripped = false;
};

/// DNF to procedural formulas, one per non-empty equivalence class.
/// Throws TransformFailed when no class yields a formula.
TransformResult dnf2ltl(const Environment& env, const Dnf& dnf, const std::vector<Trajectory>& demos,
                        const std::vector<dsl::ExprPtr>& allowed, const std::vector<dsl::ExprPtr>& redundant,
                        const TransformConfig& cfg = {});

/// Greedily drop conjunction predicates while the likelihood strictly grows.
ProceduralFormula prune(const ProceduralFormula& f, const OpCache& ops);
ProceduralFormula prune(const Environment& env, const ProceduralFormula& f, const std::vector<Trajectory>& trajs);

/// Prune every class formula and keep the one with the highest likelihood.
ProceduralFormula select_pruned(const Environment& env, const std::vector<ProceduralFormula>& candidates,
                                const std::vector<Trajectory>& trajs);

}  // namespace stratdisc
