#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rnnkit/csp/domain.hpp"

namespace rnnkit::csp {

enum class VarKind { Constant, Resolution, Intermediate };
enum class Prefer { Smallest, Largest };
enum class Relation { Equal, LessEqual, Divides };
enum class ExprOp { Var, Add, Mul };

using VarIndex = int;
using NodeIndex = int;

struct Variable {
  std::string id;
  Domain domain;
  VarKind kind = VarKind::Resolution;
};

/// Parse-tree node. Add/Mul are strictly binary; n-ary terms are built by
/// nesting. Var leaves reference a Variable by index.
struct ExprNode {
  ExprOp op = ExprOp::Var;
  VarIndex var = -1;    // valid when op == Var
  NodeIndex lhs = -1;   // valid when op != Var
  NodeIndex rhs = -1;
};

/// relation(lhs, rhs); Divides means lhs evenly divides rhs.
struct Constraint {
  Relation relation = Relation::Equal;
  NodeIndex lhs = -1;
  NodeIndex rhs = -1;
};

struct Heuristic {
  std::vector<VarIndex> order;                 // resolution variables, each once
  std::unordered_map<VarIndex, Prefer> value_preference;

  Prefer preference_of(VarIndex v) const {
    auto it = value_preference.find(v);
    return it == value_preference.end() ? Prefer::Smallest : it->second;
  }
};

class CspProblem {
 public:
  VarIndex add_variable(std::string id, Domain domain, VarKind kind);
  NodeIndex leaf(VarIndex v);
  NodeIndex node(ExprOp op, NodeIndex lhs, NodeIndex rhs);
  void add_constraint(Relation rel, NodeIndex lhs, NodeIndex rhs);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  Heuristic& heuristic() { return heuristic_; }
  const Heuristic& heuristic() const { return heuristic_; }

  Domain& domain(VarIndex v) { return variables_[static_cast<std::size_t>(v)].domain; }
  const Variable& var(VarIndex v) const { return variables_[static_cast<std::size_t>(v)]; }
  std::optional<VarIndex> find(const std::string& id) const;

  /// Resolution variable indices in declaration order.
  std::vector<VarIndex> resolution_variables() const;

  /// Fills heuristic order with any resolution variables not yet listed,
  /// in declaration order. Existing entries keep their position.
  void complete_heuristic();

  /// Throws std::invalid_argument when a constraint references a missing
  /// variable/node, a domain is empty at declaration for a constant, or the
  /// heuristic order mentions non-resolution variables or duplicates.
  void validate() const;

 private:
  std::vector<Variable> variables_;
  std::vector<ExprNode> nodes_;
  std::vector<Constraint> constraints_;
  Heuristic heuristic_;
  std::unordered_map<std::string, VarIndex> ids_;
};

/// Convenience expression handle for building constraints fluently.
class ExprBuilder {
 public:
  ExprBuilder(CspProblem* p, NodeIndex n) : problem_(p), node_(n) {}
  NodeIndex node() const { return node_; }
  CspProblem* problem() const { return problem_; }

  friend ExprBuilder operator+(ExprBuilder a, ExprBuilder b) {
    return {a.problem_, a.problem_->node(ExprOp::Add, a.node_, b.node_)};
  }
  friend ExprBuilder operator*(ExprBuilder a, ExprBuilder b) {
    return {a.problem_, a.problem_->node(ExprOp::Mul, a.node_, b.node_)};
  }

 private:
  CspProblem* problem_;
  NodeIndex node_;
};

struct Solution {
  std::map<std::string, Int> assignment;  // resolution-variable id -> value
};

/// Evaluates an expression node under a full assignment of variable values
/// (indexed by VarIndex), with saturating arithmetic.
Int evaluate(const CspProblem& p, NodeIndex n, const std::vector<Int>& values);

/// True when every constraint holds exactly under the per-variable values.
bool satisfies_all(const CspProblem& p, const std::vector<Int>& values);

}  // namespace rnnkit::csp
