#include "rnnkit/csp/json_io.hpp"

#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace rnnkit::csp {

using nlohmann::ordered_json;

namespace {

Domain parse_domain(const ordered_json& j) {
  if (j.is_number_integer()) return Domain::singleton(j.get<Int>());
  if (j.is_array()) {
    std::vector<Int> vals;
    for (const auto& v : j) vals.push_back(v.get<Int>());
    return Domain::of(std::move(vals));
  }
  if (j.is_object()) {
    Int lo = j.at("min").get<Int>();
    Int hi = j.at("max").get<Int>();
    Int stride = j.value("stride", Int{1});
    return Domain::strided(lo, hi, stride);
  }
  throw std::invalid_argument("domain must be an integer, a list, or {min,max[,stride]}");
}

Relation parse_relation(const std::string& s) {
  if (s == "equal" || s == "=") return Relation::Equal;
  if (s == "less_equal" || s == "<=") return Relation::LessEqual;
  if (s == "divides" || s == "|") return Relation::Divides;
  throw std::invalid_argument("unknown relation: " + s);
}

struct ExprParser {
  CspProblem& p;
  int next_const = 0;

  NodeIndex parse(const ordered_json& j) {
    if (!j.is_object()) throw std::invalid_argument("expression must be an object");
    if (j.contains("var")) {
      auto id = j.at("var").get<std::string>();
      auto v = p.find(id);
      if (!v) throw std::invalid_argument("expression references unknown variable: " + id);
      return p.leaf(*v);
    }
    if (j.contains("const")) {
      Int value = j.at("const").get<Int>();
      std::string id;
      do {
        id = "_c" + std::to_string(next_const++);
      } while (p.find(id));
      return p.leaf(p.add_variable(id, Domain::singleton(value), VarKind::Constant));
    }
    auto op_name = j.at("op").get<std::string>();
    ExprOp op;
    if (op_name == "add" || op_name == "+") op = ExprOp::Add;
    else if (op_name == "mul" || op_name == "*") op = ExprOp::Mul;
    else throw std::invalid_argument("unknown expression op: " + op_name);
    const auto& children = j.at("children");
    if (!children.is_array() || children.size() < 2)
      throw std::invalid_argument("add/mul needs at least two children");
    NodeIndex acc = parse(children[0]);
    for (std::size_t i = 1; i < children.size(); ++i)
      acc = p.node(op, acc, parse(children[i]));
    return acc;
  }
};

}  // namespace

CspProblem problem_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  CspProblem p;
  for (const auto& vj : j.at("variables")) {
    auto id = vj.at("id").get<std::string>();
    Domain dom = parse_domain(vj.at("domain"));
    std::string kind_s = vj.value("kind", std::string("resolution"));
    VarKind kind;
    if (kind_s == "resolution") kind = VarKind::Resolution;
    else if (kind_s == "constant") kind = VarKind::Constant;
    else if (kind_s == "intermediate") kind = VarKind::Intermediate;
    else throw std::invalid_argument("unknown variable kind: " + kind_s);
    VarIndex v = p.add_variable(id, dom, kind);
    std::string pref = vj.value("preference", std::string("smallest"));
    if (pref == "largest" || pref == "prefer_largest")
      p.heuristic().value_preference[v] = Prefer::Largest;
    else if (pref == "smallest" || pref == "prefer_smallest")
      p.heuristic().value_preference[v] = Prefer::Smallest;
    else
      throw std::invalid_argument("unknown preference: " + pref);
  }
  ExprParser expr{p};
  if (j.contains("constraints")) {
    for (const auto& cj : j.at("constraints")) {
      Relation rel = parse_relation(cj.at("relation").get<std::string>());
      NodeIndex lhs = expr.parse(cj.at("lhs"));
      NodeIndex rhs = expr.parse(cj.at("rhs"));
      p.add_constraint(rel, lhs, rhs);
    }
  }
  if (j.contains("order")) {
    for (const auto& oj : j.at("order")) {
      auto id = oj.get<std::string>();
      auto v = p.find(id);
      if (!v) throw std::invalid_argument("order references unknown variable: " + id);
      p.heuristic().order.push_back(*v);
    }
  }
  p.complete_heuristic();
  p.validate();
  return p;
}

std::string solution_to_json(const std::optional<Solution>& solution) {
  ordered_json j;
  if (!solution) {
    j["status"] = "infeasible";
  } else {
    for (const auto& [id, value] : solution->assignment) j[id] = value;
  }
  return j.dump();
}

std::string problem_to_json(const CspProblem& p) {
  ordered_json j;
  j["variables"] = ordered_json::array();
  for (VarIndex i = 0; i < static_cast<VarIndex>(p.variables().size()); ++i) {
    const Variable& v = p.var(i);
    ordered_json vj;
    vj["id"] = v.id;
    if (v.domain.is_singleton()) {
      vj["domain"] = v.domain.min();
    } else if (!v.domain.is_empty() &&
               v.domain.size() == (v.domain.max() - v.domain.min()) / v.domain.stride() + 1) {
      vj["domain"] = ordered_json{{"min", v.domain.min()}, {"max", v.domain.max()}};
      if (v.domain.stride() != 1) vj["domain"]["stride"] = v.domain.stride();
    } else {
      vj["domain"] = v.domain.values();
    }
    switch (v.kind) {
      case VarKind::Constant: vj["kind"] = "constant"; break;
      case VarKind::Resolution: vj["kind"] = "resolution"; break;
      case VarKind::Intermediate: vj["kind"] = "intermediate"; break;
    }
    if (v.kind == VarKind::Resolution)
      vj["preference"] =
          p.heuristic().preference_of(i) == Prefer::Largest ? "largest" : "smallest";
    j["variables"].push_back(vj);
  }
  auto expr_json = [&](NodeIndex n, auto&& self) -> ordered_json {
    const ExprNode& e = p.nodes()[static_cast<std::size_t>(n)];
    if (e.op == ExprOp::Var) {
      const Variable& v = p.var(e.var);
      if (v.kind == VarKind::Constant && v.id.rfind("_c", 0) == 0)
        return ordered_json{{"const", v.domain.min()}};
      return ordered_json{{"var", v.id}};
    }
    return ordered_json{{"op", e.op == ExprOp::Add ? "add" : "mul"},
                        {"children", ordered_json::array({self(e.lhs, self), self(e.rhs, self)})}};
  };
  j["constraints"] = ordered_json::array();
  for (const auto& c : p.constraints()) {
    const char* rel = c.relation == Relation::Equal ? "equal"
                      : c.relation == Relation::LessEqual ? "less_equal"
                                                          : "divides";
    j["constraints"].push_back(ordered_json{{"relation", rel},
                                            {"lhs", expr_json(c.lhs, expr_json)},
                                            {"rhs", expr_json(c.rhs, expr_json)}});
  }
  j["order"] = ordered_json::array();
  for (VarIndex v : p.heuristic().order) j["order"].push_back(p.var(v).id);
  return j.dump(2);
}

}  // namespace rnnkit::csp
