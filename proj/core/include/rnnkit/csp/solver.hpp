#pragma once

#include <optional>

#include "rnnkit/csp/propagation.hpp"

namespace rnnkit::csp {

struct SolverStats {
  long long nodes = 0;       // search tree nodes visited
  long long backtracks = 0;
};

/// Depth-first search over resolution variables in heuristic order, trying
/// values in each variable's preference direction, with fixpoint propagation
/// after every assignment and domain restore on backtrack. Returns the first
/// solution found (which is lexicographically extremal under the heuristic)
/// or nullopt when the problem has no solution. The input problem is
/// normalized internally when needed.
std::optional<Solution> solve(const CspProblem& problem,
                              const PropagationOptions& opts = {},
                              SolverStats* stats = nullptr);

/// Exhaustive enumeration over the raw resolution-variable domains, checking
/// every constraint by direct expression evaluation. Independent of the
/// propagation machinery; used as a test oracle. Throws std::invalid_argument
/// when the product of domain sizes exceeds `cap` or when the problem
/// contains intermediate variables (run it on pre-normalization problems).
std::vector<Solution> brute_force_solve(const CspProblem& problem, Int cap);

}  // namespace rnnkit::csp
