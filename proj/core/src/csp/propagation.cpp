#include "rnnkit/csp/propagation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

namespace rnnkit::csp {

namespace {

// ---------------------------------------------------------------------------
// Set combination helpers. Each returns a superset of the true combined set;
// the result is exact when the inputs are small enough to enumerate.
// ---------------------------------------------------------------------------

// Progression covering {a + b : a in A, b in B}. All sums lie on the lattice
// min(A)+min(B) + gcd(stride(A), stride(B)) * k.
Domain sum_hull(const Domain& a, const Domain& b) {
  Int g = std::gcd(a.stride(), b.stride());
  if (g < 1) g = 1;
  Int lo = sat_add(a.min(), b.min());
  Int hi = sat_add(a.max(), b.max());
  Int count = lo >= kIntCap ? 1 : (hi - lo) / g + 1;
  return Domain::strided(lo, lo + g * (count - 1), g);
}

// Progression covering {a * b}. Products (a0+i*sa)(b0+j*sb) lie on the
// lattice a0*b0 + gcd(a0*sb, b0*sa, sa*sb) * k.
Domain product_hull(const Domain& a, const Domain& b) {
  Int g = std::gcd(sat_mul(a.min(), b.stride()),
                   std::gcd(sat_mul(b.min(), a.stride()), sat_mul(a.stride(), b.stride())));
  if (g < 1 || g >= kIntCap) g = 1;
  Int lo = sat_mul(a.min(), b.min());
  Int hi = sat_mul(a.max(), b.max());
  if (lo >= kIntCap) return Domain::singleton(kIntCap);
  if (hi >= kIntCap) hi = lo + (kIntCap - lo) / g * g;
  return Domain::strided(lo, hi, g);
}

Domain combine(ExprOp op, const Domain& a, const Domain& b, const PropagationOptions& opts) {
  if (sat_mul(a.size(), b.size()) <= opts.pair_limit) {
    std::vector<Int> out;
    out.reserve(static_cast<std::size_t>(a.size() * b.size()));
    for (Int i = 0; i < a.size(); ++i)
      for (Int j = 0; j < b.size(); ++j)
        out.push_back(op == ExprOp::Add ? sat_add(a.nth(i), b.nth(j))
                                        : sat_mul(a.nth(i), b.nth(j)));
    return Domain::of(std::move(out));
  }
  return op == ExprOp::Add ? sum_hull(a, b) : product_hull(a, b);
}

// Superset of {p - w : p in parent, w in sib, p - w >= 1}.
Domain diff_hull(const Domain& parent, const Domain& sib) {
  Int g = std::gcd(parent.stride(), sib.stride());
  if (g < 1) g = 1;
  Int hi = parent.max() - sib.min();
  if (hi < 1) return Domain::empty();
  // parent.max() - sib.min() sits on the lattice (p0 - w0) mod g.
  Int anchor = hi;
  Int lo = std::max<Int>(1, parent.min() - sib.max());
  Int first = anchor - (anchor - lo) / g * g;
  return Domain::strided(first, hi, g);
}

// Exact enumeration of divisors of p (trial division).
void divisors_of(Int p, std::vector<Int>& out) {
  for (Int d = 1; d * d <= p; ++d) {
    if (p % d == 0) {
      out.push_back(d);
      if (d != p / d) out.push_back(p / d);
    }
  }
}

// Keep set for a Mul child: {v : exists p in parent, w in sib with v*w = p}.
// Exact via parent divisor enumeration when the parent is small, exact via
// per-value scans when the child is small, quotient-bounds hull otherwise.
Domain mul_child_keep(const Domain& child, const Domain& parent, const Domain& sib,
                      const PropagationOptions& opts) {
  if (parent.is_empty() || sib.is_empty()) return Domain::empty();
  if (parent.enumerable(opts.divisor_parent_limit) && parent.max() <= opts.trial_division_cap) {
    std::vector<Int> keep;
    std::vector<Int> divs;
    for (Int i = 0; i < parent.size(); ++i) {
      Int p = parent.nth(i);
      divs.clear();
      divisors_of(p, divs);
      for (Int d : divs)
        if (sib.contains(p / d)) keep.push_back(d);
    }
    return child.intersect(Domain::of(std::move(keep)));
  }
  if (child.enumerable(opts.enum_limit)) {
    // Scan the cheaper of sibling values (check v*w in parent) or parent
    // values (check p mod v, p/v in sibling).
    bool scan_sib = sib.size() <= parent.size();
    const Domain& scan = scan_sib ? sib : parent;
    if (scan.enumerable(opts.enum_limit)) {
      return child.filter([&](Int v) {
        for (Int i = 0; i < scan.size(); ++i) {
          Int s = scan.nth(i);
          if (scan_sib) {
            if (parent.contains(sat_mul(v, s))) return true;
          } else {
            if (s % v == 0 && sib.contains(s / v)) return true;
          }
        }
        return false;
      });
    }
    // Large regular parent: per-value interval/lattice witness check.
    return child.filter([&](Int v) {
      return !parent.intersect(product_hull(Domain::singleton(v), sib)).is_empty();
    });
  }
  // Quotient bounds: v*w in [pmin, pmax] for some w in [wmin, wmax].
  Int lo = (parent.min() + sib.max() - 1) / sib.max();
  Int hi = parent.max() / sib.min();
  if (lo > hi) return Domain::empty();
  return child.clamp(lo, hi);
}

// Keep set for an Add child: {v : exists p in parent, w in sib, v + w = p}.
Domain add_child_keep(const Domain& child, const Domain& parent, const Domain& sib,
                      const PropagationOptions& opts) {
  if (parent.is_empty() || sib.is_empty()) return Domain::empty();
  if (sat_mul(parent.size(), sib.size()) <= opts.pair_limit) {
    std::vector<Int> keep;
    keep.reserve(static_cast<std::size_t>(parent.size() * sib.size()));
    for (Int i = 0; i < parent.size(); ++i)
      for (Int j = 0; j < sib.size(); ++j) {
        Int v = parent.nth(i) - sib.nth(j);
        if (v >= 1) keep.push_back(v);
      }
    return child.intersect(Domain::of(std::move(keep)));
  }
  if (child.enumerable(opts.enum_limit)) {
    return child.filter([&](Int v) {
      return !parent.intersect(sum_hull(Domain::singleton(v), sib)).is_empty();
    });
  }
  return child.intersect(diff_hull(parent, sib));
}

// Exact keep sets for bindings whose two children are the same variable
// (t = x + x or t = x * x); the relaxed two-occurrence rule stays sound but
// these are cheap to make tight.
Domain same_child_keep(ExprOp op, const Domain& child, const Domain& parent,
                       const PropagationOptions& opts) {
  if (!child.enumerable(opts.enum_limit))
    return op == ExprOp::Add ? add_child_keep(child, parent, child, opts)
                             : mul_child_keep(child, parent, child, opts);
  return child.filter([&](Int v) {
    return parent.contains(op == ExprOp::Add ? sat_add(v, v) : sat_mul(v, v));
  });
}

Domain same_parent_keep(ExprOp op, const Domain& parent, const Domain& child,
                        const PropagationOptions& opts) {
  if (!parent.enumerable(opts.enum_limit)) {
    return parent.intersect(combine(op, child, child, opts));
  }
  return parent.filter([&](Int p) {
    if (op == ExprOp::Add) return p % 2 == 0 && child.contains(p / 2);
    Int r = static_cast<Int>(std::llround(std::sqrt(static_cast<double>(p))));
    for (Int v = std::max<Int>(1, r - 1); v <= r + 1; ++v)
      if (v * v == p && child.contains(v)) return true;
    return false;
  });
}

}  // namespace

bool revise_binding(std::vector<Domain>& domains, const BindCon& bind,
                    const PropagationOptions& opts) {
  Domain& dt = domains[static_cast<std::size_t>(bind.parent)];
  Domain& dx = domains[static_cast<std::size_t>(bind.x)];
  Domain& dy = domains[static_cast<std::size_t>(bind.y)];
  if (dt.is_empty() || dx.is_empty() || dy.is_empty()) return false;

  bool changed = false;
  auto apply = [&changed](Domain& dom, Domain next) {
    if (!(next == dom)) {
      dom = std::move(next);
      changed = true;
    }
  };

  if (bind.x == bind.y) {
    apply(dt, same_parent_keep(bind.op, dt, dx, opts));
    if (dt.is_empty()) return true;
    apply(dx, same_child_keep(bind.op, dx, dt, opts));
    return changed;
  }

  // Upward: parent values must be producible from the children.
  apply(dt, dt.intersect(combine(bind.op, dx, dy, opts)));
  if (dt.is_empty()) return true;
  // Downward: each child value needs a sibling witness hitting the parent.
  if (bind.op == ExprOp::Add) {
    apply(dx, add_child_keep(dx, dt, dy, opts));
    if (dx.is_empty()) return true;
    apply(dy, add_child_keep(dy, dt, dx, opts));
  } else {
    apply(dx, mul_child_keep(dx, dt, dy, opts));
    if (dx.is_empty()) return true;
    apply(dy, mul_child_keep(dy, dt, dx, opts));
  }
  return changed;
}

bool revise_relation(std::vector<Domain>& domains, const RelCon& rel,
                     const PropagationOptions& opts) {
  Domain& da = domains[static_cast<std::size_t>(rel.a)];
  Domain& db = domains[static_cast<std::size_t>(rel.b)];
  if (da.is_empty() || db.is_empty()) return false;
  bool changed = false;
  auto apply = [&changed](Domain& dom, Domain next) {
    if (!(next == dom)) {
      dom = std::move(next);
      changed = true;
    }
  };

  switch (rel.relation) {
    case Relation::Equal: {
      if (rel.a == rel.b) return false;
      Domain both = da.intersect(db);
      apply(da, both);
      apply(db, std::move(both));
      break;
    }
    case Relation::LessEqual: {
      if (rel.a == rel.b) return false;
      apply(da, da.clamp(1, db.max()));
      if (da.is_empty()) return true;
      apply(db, db.clamp(da.min(), kIntCap));
      break;
    }
    case Relation::Divides: {
      if (rel.a == rel.b) return false;  // x | x always holds
      // Divisor side: keep a when some multiple of it remains in b.
      if (da.enumerable(opts.enum_limit)) {
        apply(da, da.filter([&](Int v) { return !db.keep_multiples_of(v).is_empty(); }));
      } else {
        apply(da, da.clamp(1, db.max()));
      }
      if (da.is_empty()) return true;
      // Multiple side: keep b when some a divides it.
      if (da.is_singleton()) {
        apply(db, db.keep_multiples_of(da.min()));
      } else if (da.enumerable(opts.enum_limit)) {
        if (db.enumerable(opts.enum_limit)) {
          apply(db, db.filter([&](Int u) {
            for (Int i = 0; i < da.size(); ++i)
              if (u % da.nth(i) == 0) return true;
            return false;
          }));
        } else {
          // Union of the per-divisor progressions, materialized when small.
          std::vector<Int> merged;
          Int total = 0;
          bool exact = true;
          for (Int i = 0; i < da.size() && exact; ++i) {
            Domain m = db.keep_multiples_of(da.nth(i));
            total = sat_add(total, m.size());
            if (total > opts.pair_limit) {
              exact = false;
              break;
            }
            for (Int j = 0; j < m.size(); ++j) merged.push_back(m.nth(j));
          }
          if (exact) apply(db, Domain::of(std::move(merged)));
          else apply(db, db.clamp(da.min(), kIntCap));
        }
      } else {
        apply(db, db.clamp(da.min(), kIntCap));
      }
      break;
    }
  }
  return changed;
}

CompiledConstraints compile_constraints(const CspProblem& p) {
  CompiledConstraints cc;
  const auto& nodes = p.nodes();
  auto leaf_var = [&](NodeIndex n) -> VarIndex {
    return nodes[static_cast<std::size_t>(n)].op == ExprOp::Var
               ? nodes[static_cast<std::size_t>(n)].var
               : -1;
  };
  for (const auto& c : p.constraints()) {
    VarIndex a = leaf_var(c.lhs);
    VarIndex b = leaf_var(c.rhs);
    if (a >= 0 && b >= 0) {
      cc.rels.push_back(RelCon{c.relation, a, b});
      continue;
    }
    // One side must be a depth-1 term with leaf children, paired by Equal.
    NodeIndex term = a >= 0 ? c.rhs : c.lhs;
    VarIndex parent = a >= 0 ? a : b;
    const ExprNode& tn = nodes[static_cast<std::size_t>(term)];
    VarIndex x = tn.op == ExprOp::Var ? -1 : leaf_var(tn.lhs);
    VarIndex y = tn.op == ExprOp::Var ? -1 : leaf_var(tn.rhs);
    if (c.relation != Relation::Equal || parent < 0 || x < 0 || y < 0)
      throw std::invalid_argument("constraint set is not normalized");
    cc.binds.push_back(BindCon{parent, tn.op, x, y});
  }
  cc.var_to_cons.assign(p.variables().size(), {});
  for (int i = 0; i < static_cast<int>(cc.rels.size()); ++i) {
    cc.var_to_cons[static_cast<std::size_t>(cc.rels[static_cast<std::size_t>(i)].a)].push_back(i);
    cc.var_to_cons[static_cast<std::size_t>(cc.rels[static_cast<std::size_t>(i)].b)].push_back(i);
  }
  int base = static_cast<int>(cc.rels.size());
  for (int i = 0; i < static_cast<int>(cc.binds.size()); ++i) {
    const auto& bc = cc.binds[static_cast<std::size_t>(i)];
    for (VarIndex v : {bc.parent, bc.x, bc.y})
      cc.var_to_cons[static_cast<std::size_t>(v)].push_back(base + i);
  }
  for (auto& lst : cc.var_to_cons) {
    std::sort(lst.begin(), lst.end());
    lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
  }
  return cc;
}

ArcReduceOutcome propagate(std::vector<Domain>& domains, const CompiledConstraints& cc,
                           const std::vector<int>& seed_constraints,
                           const PropagationOptions& opts) {
  std::deque<int> queue(seed_constraints.begin(), seed_constraints.end());
  std::vector<bool> queued(static_cast<std::size_t>(cc.total()), false);
  for (int c : queue) queued[static_cast<std::size_t>(c)] = true;

  auto total_cardinality = [&domains]() {
    Int t = 0;
    for (const auto& d : domains) t = sat_add(t, d.size());
    return t;
  };

  ArcReduceOutcome out;
  while (!queue.empty()) {
    int ci = queue.front();
    queue.pop_front();
    queued[static_cast<std::size_t>(ci)] = false;

    std::array<VarIndex, 3> touched{-1, -1, -1};
    std::array<Int, 3> before{0, 0, 0};
    bool changed = false;
    if (ci < static_cast<int>(cc.rels.size())) {
      const RelCon& rc = cc.rels[static_cast<std::size_t>(ci)];
      touched = {rc.a, rc.b, -1};
      before = {domains[static_cast<std::size_t>(rc.a)].size(),
                domains[static_cast<std::size_t>(rc.b)].size(), 0};
      changed = revise_relation(domains, rc, opts);
    } else {
      const BindCon& bc = cc.binds[static_cast<std::size_t>(ci - static_cast<int>(cc.rels.size()))];
      touched = {bc.parent, bc.x, bc.y};
      before = {domains[static_cast<std::size_t>(bc.parent)].size(),
                domains[static_cast<std::size_t>(bc.x)].size(),
                domains[static_cast<std::size_t>(bc.y)].size()};
      changed = revise_binding(domains, bc, opts);
    }
    if (!changed) continue;
    out.changed = true;
    if (opts.on_total_cardinality) opts.on_total_cardinality(total_cardinality());
    for (int k = 0; k < 3; ++k) {
      VarIndex v = touched[static_cast<std::size_t>(k)];
      if (v < 0) continue;
      const Domain& d = domains[static_cast<std::size_t>(v)];
      if (d.is_empty()) {
        out.feasible = false;
        return out;
      }
      if (d.size() == before[static_cast<std::size_t>(k)]) continue;
      for (int adj : cc.var_to_cons[static_cast<std::size_t>(v)]) {
        if (!queued[static_cast<std::size_t>(adj)]) {
          queued[static_cast<std::size_t>(adj)] = true;
          queue.push_back(adj);
        }
      }
    }
  }
  return out;
}

bool is_normalized(const CspProblem& p) {
  const auto& nodes = p.nodes();
  auto is_leaf = [&](NodeIndex n) { return nodes[static_cast<std::size_t>(n)].op == ExprOp::Var; };
  for (const auto& c : p.constraints()) {
    if (is_leaf(c.lhs) && is_leaf(c.rhs)) continue;
    if (c.relation != Relation::Equal) return false;
    NodeIndex leaf = is_leaf(c.lhs) ? c.lhs : (is_leaf(c.rhs) ? c.rhs : -1);
    NodeIndex term = is_leaf(c.lhs) ? c.rhs : c.lhs;
    if (leaf < 0) return false;
    const ExprNode& tn = nodes[static_cast<std::size_t>(term)];
    if (!is_leaf(tn.lhs) || !is_leaf(tn.rhs)) return false;
    // Structural bindings target intermediates; anything else is rewritten.
    if (p.var(nodes[static_cast<std::size_t>(leaf)].var).kind != VarKind::Intermediate)
      return false;
  }
  return true;
}

CspProblem normalize_problem(const CspProblem& problem) {
  problem.validate();
  if (is_normalized(problem)) return problem;

  CspProblem out;
  // Copy variables verbatim so indices stay stable.
  for (const auto& v : problem.variables()) out.add_variable(v.id, v.domain, v.kind);
  out.heuristic() = problem.heuristic();

  std::map<std::tuple<ExprOp, VarIndex, VarIndex>, VarIndex> memo;
  int next_tmp = 0;
  PropagationOptions hull_opts;
  hull_opts.pair_limit = 0;  // initial domains use lattice hulls only

  // Reduces an expression tree to a single variable, creating intermediates
  // bottom-up for every compound node.
  std::function<VarIndex(NodeIndex)> flatten = [&](NodeIndex n) -> VarIndex {
    const ExprNode& e = problem.nodes()[static_cast<std::size_t>(n)];
    if (e.op == ExprOp::Var) return e.var;
    VarIndex a = flatten(e.lhs);
    VarIndex b = flatten(e.rhs);
    if (a > b) std::swap(a, b);  // Add/Mul are commutative
    auto key = std::make_tuple(e.op, a, b);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    Domain init = combine(e.op, out.var(a).domain, out.var(b).domain, hull_opts);
    std::string id;
    do {
      id = "_t" + std::to_string(next_tmp++);
    } while (out.find(id));
    VarIndex t = out.add_variable(id, init, VarKind::Intermediate);
    out.add_constraint(Relation::Equal, out.leaf(t),
                       out.node(e.op, out.leaf(a), out.leaf(b)));
    memo.emplace(key, t);
    return t;
  };

  for (const auto& c : problem.constraints()) {
    VarIndex a = flatten(c.lhs);
    VarIndex b = flatten(c.rhs);
    out.add_constraint(c.relation, out.leaf(a), out.leaf(b));
  }
  return out;
}

ArcReduceOutcome global_arc_reduce(CspProblem& problem, const PropagationOptions& opts) {
  if (!is_normalized(problem))
    throw std::invalid_argument("global_arc_reduce requires a normalized problem");
  CompiledConstraints cc = compile_constraints(problem);
  std::vector<Domain> domains;
  domains.reserve(problem.variables().size());
  for (const auto& v : problem.variables()) domains.push_back(v.domain);
  std::vector<int> all(static_cast<std::size_t>(cc.total()));
  std::iota(all.begin(), all.end(), 0);
  ArcReduceOutcome out = propagate(domains, cc, all, opts);
  for (VarIndex i = 0; i < static_cast<VarIndex>(domains.size()); ++i)
    problem.domain(i) = domains[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace rnnkit::csp
