#include "rnnkit/csp/solver.hpp"

#include <numeric>
#include <stdexcept>

namespace rnnkit::csp {

namespace {

// Verifies a fully collapsed domain store against the original constraints.
bool verify_collapsed(const CspProblem& p, const std::vector<Domain>& domains) {
  std::vector<Int> values(domains.size());
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (!domains[i].is_singleton()) return true;  // not fully determined; trust propagation
    values[i] = domains[i].min();
  }
  return satisfies_all(p, values);
}

}  // namespace

std::optional<Solution> solve(const CspProblem& input, const PropagationOptions& opts,
                              SolverStats* stats) {
  CspProblem p = normalize_problem(input);
  p.complete_heuristic();
  p.validate();

  CompiledConstraints cc = compile_constraints(p);
  std::vector<Domain> domains;
  domains.reserve(p.variables().size());
  for (const auto& v : p.variables()) domains.push_back(v.domain);

  std::vector<int> all(static_cast<std::size_t>(cc.total()));
  std::iota(all.begin(), all.end(), 0);
  if (!propagate(domains, cc, all, opts).feasible) return std::nullopt;

  const auto& order = p.heuristic().order;
  SolverStats local;
  SolverStats& st = stats ? *stats : local;

  // Iterative DFS with a domain snapshot per depth (restore on backtrack).
  std::function<bool(std::size_t)> descend = [&](std::size_t depth) -> bool {
    if (depth == order.size()) return true;
    VarIndex v = order[depth];
    Domain at_entry = domains[static_cast<std::size_t>(v)];
    bool descending = p.heuristic().preference_of(v) == Prefer::Largest;
    std::vector<Domain> snapshot = domains;
    for (Int k = 0; k < at_entry.size(); ++k) {
      Int val = at_entry.nth(descending ? at_entry.size() - 1 - k : k);
      // Values pruned at deeper levels stay pruned only inside that subtree;
      // after restore the entry domain is authoritative.
      if (!domains[static_cast<std::size_t>(v)].contains(val)) continue;
      ++st.nodes;
      domains[static_cast<std::size_t>(v)] = Domain::singleton(val);
      if (propagate(domains, cc, cc.var_to_cons[static_cast<std::size_t>(v)], opts).feasible &&
          descend(depth + 1)) {
        return true;
      }
      ++st.backtracks;
      domains = snapshot;
    }
    return false;
  };

  if (!descend(0)) return std::nullopt;
  if (!verify_collapsed(p, domains))
    throw std::logic_error("solver produced an assignment violating a constraint");

  Solution sol;
  for (VarIndex v : order)
    sol.assignment.emplace(p.var(v).id, domains[static_cast<std::size_t>(v)].min());
  return sol;
}

std::vector<Solution> brute_force_solve(const CspProblem& problem, Int cap) {
  problem.validate();
  for (const auto& v : problem.variables())
    if (v.kind == VarKind::Intermediate)
      throw std::invalid_argument("brute_force_solve expects a pre-normalization problem");

  std::vector<VarIndex> res = problem.resolution_variables();
  Int space = 1;
  for (VarIndex v : res) space = sat_mul(space, problem.var(v).domain.size());
  if (space > cap)
    throw std::invalid_argument("brute_force_solve: search space exceeds cap");

  std::vector<Int> values(problem.variables().size());
  for (VarIndex i = 0; i < static_cast<VarIndex>(problem.variables().size()); ++i) {
    const auto& v = problem.var(i);
    if (v.kind == VarKind::Constant) values[static_cast<std::size_t>(i)] = v.domain.min();
  }

  std::vector<Solution> found;
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == res.size()) {
      if (satisfies_all(problem, values)) {
        Solution s;
        for (VarIndex v : res)
          s.assignment.emplace(problem.var(v).id, values[static_cast<std::size_t>(v)]);
        found.push_back(std::move(s));
      }
      return;
    }
    const Domain& d = problem.var(res[k]).domain;
    for (Int i = 0; i < d.size(); ++i) {
      values[static_cast<std::size_t>(res[k])] = d.nth(i);
      rec(k + 1);
    }
  };
  rec(0);
  return found;
}

}  // namespace rnnkit::csp
