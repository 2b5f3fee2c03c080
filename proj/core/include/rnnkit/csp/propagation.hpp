#pragma once

#include <functional>
#include <vector>

#include "rnnkit/csp/problem.hpp"

namespace rnnkit::csp {

struct PropagationOptions {
  // Domains at or below this size take exact per-value pruning paths.
  Int enum_limit = 4096;
  // Exact pairwise set combination (sum/product sets) up to this many pairs.
  Int pair_limit = 1 << 16;
  // Divisor enumeration of parent products is attempted when the parent
  // domain has at most this many values and values stay below the cap.
  Int divisor_parent_limit = 512;
  Int trial_division_cap = Int{1} << 40;
  // Invoked with the total domain cardinality after every narrowing step.
  std::function<void(Int)> on_total_cardinality;
};

/// leaf `relation` leaf after normalization.
struct RelCon {
  Relation relation;
  VarIndex a;
  VarIndex b;
};

/// parent = x op y (op is Add or Mul).
struct BindCon {
  VarIndex parent;
  ExprOp op;
  VarIndex x;
  VarIndex y;
};

/// Rewrites every compound sub-term onto a fresh intermediate variable with
/// an interval/lattice initial domain wide enough for all child combinations.
/// Identical sub-terms share one intermediate. Idempotent; problems without
/// compound terms are returned unchanged.
CspProblem normalize_problem(const CspProblem& problem);

bool is_normalized(const CspProblem& problem);

struct ArcReduceOutcome {
  bool changed = false;
  bool feasible = true;  // false when some domain was reduced to empty
};

/// Fixpoint propagation over all constraints of a normalized problem
/// (AC-3-style worklist; semantics equal to full re-sweeps until no change).
/// Narrows domains in place.
ArcReduceOutcome global_arc_reduce(CspProblem& problem,
                                   const PropagationOptions& opts = {});

/// Single revision of one add/mul binding: prunes parent from children
/// (upward) and children from parent plus sibling (downward). For Mul the
/// downward rule keeps a child value v only if some parent value p has
/// p mod v = 0 with p / v in the sibling's domain. Returns true when any of
/// the three domains changed. May produce empty domains.
bool revise_binding(std::vector<Domain>& domains, const BindCon& bind,
                    const PropagationOptions& opts = {});

/// Single revision of a leaf-to-leaf relation. Returns true on change.
bool revise_relation(std::vector<Domain>& domains, const RelCon& rel,
                     const PropagationOptions& opts = {});

/// Internal compiled view of a normalized problem; exposed for the solver.
struct CompiledConstraints {
  std::vector<RelCon> rels;
  std::vector<BindCon> binds;
  // constraint ordinal space: [0, rels.size()) then binds
  std::vector<std::vector<int>> var_to_cons;
  int total() const { return static_cast<int>(rels.size() + binds.size()); }
};

CompiledConstraints compile_constraints(const CspProblem& problem);

/// Worklist propagation to fixpoint over explicit domain storage.
ArcReduceOutcome propagate(std::vector<Domain>& domains,
                           const CompiledConstraints& cc,
                           const std::vector<int>& seed_constraints,
                           const PropagationOptions& opts);

}  // namespace rnnkit::csp
