#pragma once

#include <string>

#include "rnnkit/csp/problem.hpp"

namespace rnnkit::csp {

/// Parses the documented problem schema:
///   variables:   [{id, domain, kind?, preference?}, ...]
///                domain is an integer, a value list, or {min, max, stride?}
///   constraints: [{relation: equal|less_equal|divides, lhs, rhs}, ...]
///                expressions: {var: id} | {const: n} | {op: add|mul,
///                children: [e, e, ...]} (n-ary children fold left to binary)
///   order:       [id, ...] optional; defaults to declaration order
/// Throws std::invalid_argument with a message on any schema violation.
CspProblem problem_from_json(const std::string& text);

/// Solution as {"id": value, ...}; infeasible as {"status": "infeasible"}.
std::string solution_to_json(const std::optional<Solution>& solution);

std::string problem_to_json(const CspProblem& problem);

}  // namespace rnnkit::csp
