#include "rnnkit/csp/problem.hpp"

#include <set>
#include <stdexcept>

namespace rnnkit::csp {

VarIndex CspProblem::add_variable(std::string id, Domain domain, VarKind kind) {
  if (ids_.count(id)) throw std::invalid_argument("duplicate variable id: " + id);
  if (kind == VarKind::Constant && !domain.is_singleton())
    throw std::invalid_argument("constant must have a singleton domain: " + id);
  VarIndex idx = static_cast<VarIndex>(variables_.size());
  ids_.emplace(id, idx);
  variables_.push_back(Variable{std::move(id), std::move(domain), kind});
  return idx;
}

NodeIndex CspProblem::leaf(VarIndex v) {
  if (v < 0 || v >= static_cast<VarIndex>(variables_.size()))
    throw std::invalid_argument("expression references unknown variable");
  nodes_.push_back(ExprNode{ExprOp::Var, v, -1, -1});
  return static_cast<NodeIndex>(nodes_.size() - 1);
}

NodeIndex CspProblem::node(ExprOp op, NodeIndex lhs, NodeIndex rhs) {
  if (op == ExprOp::Var) throw std::invalid_argument("use leaf() for var nodes");
  auto in_range = [this](NodeIndex n) { return n >= 0 && n < static_cast<NodeIndex>(nodes_.size()); };
  if (!in_range(lhs) || !in_range(rhs))
    throw std::invalid_argument("expression child out of range");
  nodes_.push_back(ExprNode{op, -1, lhs, rhs});
  return static_cast<NodeIndex>(nodes_.size() - 1);
}

void CspProblem::add_constraint(Relation rel, NodeIndex lhs, NodeIndex rhs) {
  auto in_range = [this](NodeIndex n) { return n >= 0 && n < static_cast<NodeIndex>(nodes_.size()); };
  if (!in_range(lhs) || !in_range(rhs))
    throw std::invalid_argument("constraint references unknown expression node");
  constraints_.push_back(Constraint{rel, lhs, rhs});
}

std::optional<VarIndex> CspProblem::find(const std::string& id) const {
  auto it = ids_.find(id);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<VarIndex> CspProblem::resolution_variables() const {
  std::vector<VarIndex> out;
  for (VarIndex i = 0; i < static_cast<VarIndex>(variables_.size()); ++i)
    if (variables_[static_cast<std::size_t>(i)].kind == VarKind::Resolution) out.push_back(i);
  return out;
}

void CspProblem::complete_heuristic() {
  std::set<VarIndex> listed(heuristic_.order.begin(), heuristic_.order.end());
  for (VarIndex v : resolution_variables())
    if (!listed.count(v)) heuristic_.order.push_back(v);
}

void CspProblem::validate() const {
  for (const auto& n : nodes_) {
    if (n.op == ExprOp::Var) {
      if (n.var < 0 || n.var >= static_cast<VarIndex>(variables_.size()))
        throw std::invalid_argument("dangling variable reference in expression");
    }
  }
  std::set<VarIndex> seen;
  for (VarIndex v : heuristic_.order) {
    if (v < 0 || v >= static_cast<VarIndex>(variables_.size()) ||
        variables_[static_cast<std::size_t>(v)].kind != VarKind::Resolution)
      throw std::invalid_argument("heuristic order must list resolution variables");
    if (!seen.insert(v).second)
      throw std::invalid_argument("heuristic order lists a variable twice");
  }
}

Int evaluate(const CspProblem& p, NodeIndex n, const std::vector<Int>& values) {
  const ExprNode& e = p.nodes()[static_cast<std::size_t>(n)];
  switch (e.op) {
    case ExprOp::Var:
      return values[static_cast<std::size_t>(e.var)];
    case ExprOp::Add:
      return sat_add(evaluate(p, e.lhs, values), evaluate(p, e.rhs, values));
    case ExprOp::Mul:
      return sat_mul(evaluate(p, e.lhs, values), evaluate(p, e.rhs, values));
  }
  return 0;
}

bool satisfies_all(const CspProblem& p, const std::vector<Int>& values) {
  for (const auto& c : p.constraints()) {
    Int a = evaluate(p, c.lhs, values);
    Int b = evaluate(p, c.rhs, values);
    switch (c.relation) {
      case Relation::Equal:
        if (a != b) return false;
        break;
      case Relation::LessEqual:
        if (a > b) return false;
        break;
      case Relation::Divides:
        if (b % a != 0) return false;
        break;
    }
  }
  return true;
}

}  // namespace rnnkit::csp
