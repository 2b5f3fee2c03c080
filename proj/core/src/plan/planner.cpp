#include "rnnkit/plan/planner.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace rnnkit::plan {

using csp::CspProblem;
using csp::Domain;
using csp::ExprBuilder;
using csp::Prefer;
using csp::Relation;
using csp::VarIndex;
using csp::VarKind;
using nlohmann::ordered_json;

namespace {

Int round_up(Int v, Int m) { return (v + m - 1) / m * m; }

Int threads_cap(const hw::GpuSpec& gpu, const PlannerOptions& opts) {
  Int cap = opts.block_threads_cap_override > 0
                ? opts.block_threads_cap_override
                : gpu.max_threads_per_block / opts.block_threads_cap_divisor;
  return std::min(cap, gpu.max_threads_per_block);
}

void check_shape(const RnnShape& shape) {
  if (shape.num_states < 1 || shape.num_gates < 1 || shape.head_dim < 1 ||
      shape.num_heads < 1 || shape.batch < 1 || shape.dtype.bytes_per_element < 1)
    throw std::invalid_argument("invalid RnnShape");
}

void check_inputs(const RnnShape& shape, const hw::GpuSpec& gpu) {
  check_shape(shape);
  auto violations = hw::validate(gpu);
  if (!violations.empty())
    throw std::invalid_argument("invalid GpuSpec: " + violations.front().field + " " +
                                violations.front().message);
}

// State-axis granularity. The accumulating axis must pad to the accumulate
// tile; an outer state axis still has to keep N_g * S_S divisible by the
// accumulate tile because the gate axis accumulates in the backward pass.
Int state_granularity(const RnnShape& shape, const hw::GpuSpec& gpu, Pass pass, Int min_outer) {
  if (pass == Pass::Forward) return gpu.min_accumulate_tile;
  Int acc = gpu.min_accumulate_tile;
  Int g2 = acc / std::gcd(shape.num_gates, acc);
  return std::lcm(min_outer, g2);
}

struct ExprCtx {
  CspProblem* p;
  std::map<Int, VarIndex> consts;

  ExprBuilder lift(Int value) {
    auto it = consts.find(value);
    VarIndex v;
    if (it != consts.end()) {
      v = it->second;
    } else {
      v = p->add_variable("_k" + std::to_string(value), Domain::singleton(value),
                          VarKind::Constant);
      consts.emplace(value, v);
    }
    return ExprBuilder{p, p->leaf(v)};
  }
  ExprBuilder var(VarIndex v) { return ExprBuilder{p, p->leaf(v)}; }
};

struct BuiltVars {
  VarIndex e_b, w_b, b_b, l_b, e_g, w_g, b_g, l_g, e_s, w_s, b_s, lsr1, lss1;
};

}  // namespace

PaddedSizes padded_sizes(const RnnShape& shape, const hw::GpuSpec& gpu, Pass pass,
                         const PlannerOptions& opts) {
  check_inputs(shape, gpu);
  auto outer = gpu.outer_tile_sizes();
  Int min_outer = *std::min_element(outer.begin(), outer.end());
  Int gran_s = state_granularity(shape, gpu, pass, min_outer);
  if (!opts.allow_padding &&
      (shape.head_dim % gran_s != 0 || shape.batch % min_outer != 0))
    throw std::invalid_argument(
        "shape not representable by the elementary tiles without padding");
  PaddedSizes out;
  out.s_s = round_up(shape.head_dim, gran_s);
  out.s_g = shape.num_gates * out.s_s;
  out.s_b = round_up(shape.batch, min_outer);
  return out;
}

csp::CspProblem build_csp(const RnnShape& shape, const hw::GpuSpec& gpu, Pass pass,
                          Int register_budget_bytes, const PlannerOptions& opts) {
  PaddedSizes sz = padded_sizes(shape, gpu, pass, opts);
  auto outer = gpu.outer_tile_sizes();
  Int min_outer = *std::min_element(outer.begin(), outer.end());
  Int acc_tile = gpu.min_accumulate_tile;
  Int cap_threads = threads_cap(gpu, opts);
  Int cap_warps = cap_threads / gpu.warp_size;
  Int cores = gpu.coresident_blocks();
  Int dt = shape.dtype.bytes_per_element;
  Int acc_b = hw::accumulator_bytes(shape.dtype);

  CspProblem p;
  auto outer_dom = [&outer](Int limit) {
    std::vector<Int> vals;
    for (Int v : outer)
      if (v <= limit) vals.push_back(v);
    return Domain::of(vals);
  };

  Int min_e_g = pass == Pass::Forward ? min_outer : acc_tile;
  Int min_e_s = pass == Pass::Forward ? acc_tile : min_outer;
  Int ls_max = sz.s_s / min_e_s;

  BuiltVars v;
  v.e_b = p.add_variable("E_B", outer_dom(sz.s_b), VarKind::Resolution);
  v.w_b = p.add_variable("W_B", Domain::range(1, std::min(cap_warps, sz.s_b / min_outer)),
                         VarKind::Resolution);
  v.b_b = p.add_variable("B_B", Domain::range(1, std::min(cores, sz.s_b / min_outer)),
                         VarKind::Resolution);
  v.l_b = p.add_variable("L_B", Domain::range(1, sz.s_b / min_outer), VarKind::Resolution);

  v.e_g = p.add_variable("E_G",
                         pass == Pass::Forward ? outer_dom(sz.s_g) : Domain::singleton(acc_tile),
                         VarKind::Resolution);
  v.w_g = p.add_variable("W_G", Domain::range(1, std::min(cap_warps, sz.s_g / min_e_g)),
                         VarKind::Resolution);
  v.b_g = p.add_variable("B_G", Domain::range(1, std::min(cores, sz.s_g / min_e_g)),
                         VarKind::Resolution);
  v.l_g = p.add_variable("L_G", Domain::range(1, sz.s_g / min_e_g), VarKind::Resolution);

  v.e_s = p.add_variable("E_S",
                         pass == Pass::Forward ? Domain::singleton(acc_tile) : outer_dom(sz.s_s),
                         VarKind::Resolution);
  v.w_s = p.add_variable("W_S", Domain::range(1, std::min(cap_warps, ls_max)),
                         VarKind::Resolution);
  v.b_s = p.add_variable("B_S", Domain::range(1, std::min(cores, ls_max)),
                         VarKind::Resolution);
  v.lsr1 = p.add_variable("L_S_reg1", Domain::range(1, ls_max + 1), VarKind::Resolution);
  v.lss1 = p.add_variable("L_S_sram1", Domain::range(1, ls_max + 1), VarKind::Resolution);

  ExprCtx cx{&p};
  TileVars<ExprBuilder> tv{cx.var(v.e_b), cx.var(v.w_b), cx.var(v.b_b), cx.var(v.l_b),
                           cx.var(v.e_g), cx.var(v.w_g), cx.var(v.b_g), cx.var(v.l_g),
                           cx.var(v.e_s), cx.var(v.w_s), cx.var(v.b_s),
                           cx.var(v.lsr1), cx.var(v.lss1)};
  auto lift = [&cx](Int c) { return cx.lift(c); };

  auto require = [&p](Relation rel, ExprBuilder a, ExprBuilder b) {
    p.add_constraint(rel, a.node(), b.node());
  };

  // Per-axis factorization S_A = E*W*Bk*L. The state axis carries its loop
  // count as (L_S_reg1 + L_S_sram1) - 2, rewritten without subtraction.
  require(Relation::Equal, tv.e_b * tv.w_b * tv.b_b * tv.l_b, lift(sz.s_b));
  require(Relation::Equal, tv.e_g * tv.w_g * tv.b_g * tv.l_g, lift(sz.s_g));
  ExprBuilder ews = tv.e_s * tv.w_s * tv.b_s;
  require(Relation::Equal, ews * (tv.l_s_reg1 + tv.l_s_sram1),
          lift(sz.s_s) + lift(2) * ews);

  // Thread-block size: warp_size * W_G * W_S * W_B <= cap.
  require(Relation::LessEqual, lift(gpu.warp_size) * tv.w_g * tv.w_s * tv.w_b,
          lift(cap_threads));

  // Cooperative grid residency across all heads.
  ExprBuilder grid = tv.b_b * tv.b_g * tv.b_s;
  if (shape.num_heads > 1) grid = grid * lift(shape.num_heads);
  require(Relation::LessEqual, grid, lift(cores));

  FootprintPoly<ExprBuilder> fp =
      footprint_poly(tv, pass, dt, acc_b, opts.bank_pad_elements, lift);
  ExprBuilder warps = tv.w_b * tv.w_s * tv.w_g;
  Int reserve = gpu.calibration.reserved_regs_per_thread_bytes;

  // Register budget per block, including the per-thread reservation.
  require(Relation::LessEqual,
          fp.registers_block.plus + lift(reserve * gpu.warp_size) * warps,
          lift(register_budget_bytes) + fp.registers_block.minus);
  // Per-thread register file limit, expressed per warp.
  require(Relation::LessEqual, fp.registers_warp.plus + lift(reserve * gpu.warp_size),
          lift(gpu.calibration.max_regs_per_thread_bytes * gpu.warp_size) +
              fp.registers_warp.minus);
  // SRAM per block.
  require(Relation::LessEqual, fp.sram_block.plus,
          lift(gpu.sram_usable_per_block_bytes) + fp.sram_block.minus);

  // Redundant aggregate bound (implied by the three above): the whole
  // recurrent matrix must fit the combined on-chip bytes of the blocks that
  // shard it. Lets infeasible shapes fail during propagation.
  Int r_total = sz.s_s * sz.s_g * dt;
  require(Relation::LessEqual, lift(r_total),
          tv.b_s * tv.b_g * lift(register_budget_bytes + gpu.sram_usable_per_block_bytes));

  // Heuristic: maximize the parallel matrix axis's blocks and minimize the
  // accumulating axis's first, then loops ascending, then warps descending.
  bool fwd = pass == Pass::Forward;
  struct Rank {
    VarIndex var;
    Prefer pref;
  };
  std::vector<Rank> ranks = {
      {fwd ? v.b_g : v.b_s, Prefer::Largest},
      {fwd ? v.b_s : v.b_g, Prefer::Smallest},
      {v.b_b, Prefer::Largest},
      {v.lss1, Prefer::Smallest},
      {v.l_g, Prefer::Smallest},
      {v.l_b, Prefer::Smallest},
      {v.lsr1, Prefer::Smallest},
      {fwd ? v.w_g : v.w_s, Prefer::Largest},
      {fwd ? v.w_s : v.w_g, Prefer::Largest},
      {v.w_b, Prefer::Largest},
      {fwd ? v.e_g : v.e_s, Prefer::Largest},
      {v.e_b, Prefer::Largest},
      {fwd ? v.e_s : v.e_g, Prefer::Largest},
  };
  for (const Rank& r : ranks) {
    p.heuristic().order.push_back(r.var);
    p.heuristic().value_preference[r.var] = r.pref;
  }
  p.validate();
  return p;
}

Int hbm_traffic_per_step(Pass pass, Int s_b, Int s_g, Int s_s, Int num_states,
                         Int e_out_axis, Int blocks_acc_axis, Int dtype_bytes,
                         Int acc_bytes) {
  Int io_gates = 2 * s_b * s_g * dtype_bytes;           // inputs in, gates out (fw)
  Int io_states = 2 * num_states * s_b * s_s * dtype_bytes;
  Int reload = pass == Pass::Forward ? s_b * s_s * (s_g / e_out_axis) * dtype_bytes
                                     : s_b * s_g * (s_s / e_out_axis) * dtype_bytes;
  Int cross_unit = pass == Pass::Forward ? s_b * s_g : s_b * s_s;
  Int cross = blocks_acc_axis > 1 ? (2 * blocks_acc_axis - 1) * cross_unit * acc_bytes : 0;
  return io_gates + io_states + reload + cross;
}

MemoryFootprint estimate_footprint(const TileAssignment& a, const RnnShape& shape,
                                   const hw::GpuSpec& gpu, Pass pass,
                                   const PlannerOptions& opts) {
  auto get = [&a](const char* k) {
    auto it = a.find(k);
    if (it == a.end()) throw std::invalid_argument(std::string("missing tile variable ") + k);
    return it->second;
  };
  TileVars<Int> tv{get("E_B"), get("W_B"), get("B_B"), get("L_B"),
                   get("E_G"), get("W_G"), get("B_G"), get("L_G"),
                   get("E_S"), get("W_S"), get("B_S"),
                   get("L_S_reg1"), get("L_S_sram1")};
  Int dt = shape.dtype.bytes_per_element;
  Int acc_b = hw::accumulator_bytes(shape.dtype);
  auto fp = footprint_poly<Int>(tv, pass, dt, acc_b, opts.bank_pad_elements,
                                [](Int c) { return c; });
  PaddedSizes sz = padded_sizes(shape, gpu, pass, opts);

  MemoryFootprint out;
  out.registers_bytes = fp.registers_block.plus - fp.registers_block.minus;
  out.sram_bytes = fp.sram_block.plus - fp.sram_block.minus;
  out.hbm_traffic_per_step_bytes = hbm_traffic_per_step(
      pass, sz.s_b, sz.s_g, sz.s_s, shape.num_states,
      pass == Pass::Forward ? tv.e_g : tv.e_s,
      pass == Pass::Forward ? tv.b_s : tv.b_g, dt, acc_b);
  out.r_matrix_bytes_per_head =
      shape.num_gates * shape.head_dim * shape.head_dim * dt;
  return out;
}

std::optional<TilingPlan> plan(const RnnShape& shape, const hw::GpuSpec& gpu, Pass pass,
                               const PlannerOptions& opts) {
  check_inputs(shape, gpu);
  Int cap = opts.register_budget_override > 0 ? opts.register_budget_override
                                              : gpu.register_file_per_sm_bytes;

  auto attempt = [&](Int budget) -> std::optional<csp::Solution> {
    CspProblem problem = build_csp(shape, gpu, pass, budget, opts);
    return csp::solve(problem, opts.csp);
  };

  // Binary search for the largest feasible register budget on [0, cap].
  // Feasibility is monotone in the budget under this byte model, so the
  // boundary probe at the cap already decides it.
  std::optional<csp::Solution> best = attempt(cap);
  if (!best) return std::nullopt;
  Int budget = cap;

  TileAssignment a;
  for (const auto& [id, value] : best->assignment) a[id] = value;

  PaddedSizes sz = padded_sizes(shape, gpu, pass, opts);
  TilingPlan tp;
  tp.shape = shape;
  tp.gpu = gpu.name;
  tp.pass = pass;
  tp.batch = {"B", shape.batch, sz.s_b, a["E_B"], a["W_B"], a["B_B"], a["L_B"]};
  tp.gate = {"G", shape.num_gates * shape.head_dim, sz.s_g,
             a["E_G"], a["W_G"], a["B_G"], a["L_G"]};
  Int ls = a["L_S_reg1"] + a["L_S_sram1"] - 2;
  tp.state = {"S", shape.head_dim, sz.s_s, a["E_S"], a["W_S"], a["B_S"], ls};
  tp.loops_reg = a["L_S_reg1"] - 1;
  tp.loops_sram = a["L_S_sram1"] - 1;
  tp.register_budget_bytes = budget;
  tp.threads_per_block = gpu.warp_size * a["W_B"] * a["W_S"] * a["W_G"];
  tp.grid_blocks = a["B_B"] * a["B_G"] * a["B_S"] * shape.num_heads;
  tp.footprint = estimate_footprint(a, shape, gpu, pass, opts);
  return tp;
}

std::vector<Int> feasible_head_dims(const RnnShape& base, const hw::GpuSpec& gpu,
                                    bool both_passes, Int min_dh, Int max_dh,
                                    const PlannerOptions& opts) {
  std::vector<Int> out;
  std::map<std::tuple<Int, Int, Int, int>, bool> cache;  // padded sizes + pass
  auto feasible_pass = [&](const RnnShape& s, Pass pass) {
    PaddedSizes sz = padded_sizes(s, gpu, pass, opts);
    auto key = std::make_tuple(sz.s_b, sz.s_g, sz.s_s, static_cast<int>(pass));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    bool ok = plan(s, gpu, pass, opts).has_value();
    cache.emplace(key, ok);
    return ok;
  };
  for (Int dh = min_dh; dh <= max_dh; ++dh) {
    RnnShape s = base;
    s.head_dim = dh;
    bool ok = feasible_pass(s, Pass::Forward) &&
              (!both_passes || feasible_pass(s, Pass::Backward));
    if (ok) out.push_back(dh);
  }
  return out;
}

TileAssignment plan_assignment(const TilingPlan& p) {
  return TileAssignment{
      {"E_B", p.batch.elem},   {"W_B", p.batch.warps},  {"B_B", p.batch.blocks},
      {"L_B", p.batch.loops},  {"E_G", p.gate.elem},    {"W_G", p.gate.warps},
      {"B_G", p.gate.blocks},  {"L_G", p.gate.loops},   {"E_S", p.state.elem},
      {"W_S", p.state.warps},  {"B_S", p.state.blocks}, {"L_S_reg1", p.loops_reg + 1},
      {"L_S_sram1", p.loops_sram + 1},
  };
}

std::vector<std::string> plan_residuals(const TilingPlan& p, const hw::GpuSpec& gpu,
                                        const PlannerOptions& opts) {
  std::vector<std::string> out;
  auto fail = [&out](const std::string& m) { out.push_back(m); };

  auto check_axis = [&](const AxisTiling& ax) {
    if (ax.elem * ax.warps * ax.blocks * ax.loops != ax.size_padded)
      fail("axis " + ax.axis + ": E*W*Bk*L != padded size");
  };
  check_axis(p.batch);
  check_axis(p.gate);
  check_axis(p.state);
  if (p.loops_reg + p.loops_sram != p.state.loops)
    fail("state loop split does not sum to state loops");
  if (p.loops_reg < 0 || p.loops_sram < 0) fail("negative loop split");

  auto outer = gpu.outer_tile_sizes();
  auto is_outer = [&outer](Int e) {
    return std::find(outer.begin(), outer.end(), e) != outer.end();
  };
  const AxisTiling& acc_axis = p.pass == Pass::Forward ? p.state : p.gate;
  const AxisTiling& out_axis = p.pass == Pass::Forward ? p.gate : p.state;
  if (acc_axis.elem != gpu.min_accumulate_tile)
    fail("accumulating axis elementary tile != min_accumulate_tile");
  if (!is_outer(out_axis.elem)) fail("output axis elementary tile not in mma set");
  if (!is_outer(p.batch.elem)) fail("batch axis elementary tile not in mma set");

  Int cap = threads_cap(gpu, opts);
  if (p.threads_per_block != gpu.warp_size * p.batch.warps * p.gate.warps * p.state.warps)
    fail("threads_per_block mismatch");
  if (p.threads_per_block > cap) fail("thread count exceeds block cap");

  if (p.grid_blocks != p.batch.blocks * p.gate.blocks * p.state.blocks * p.shape.num_heads)
    fail("grid_blocks mismatch");
  if (p.grid_blocks > gpu.coresident_blocks()) fail("grid exceeds co-resident block bound");

  MemoryFootprint fp = estimate_footprint(plan_assignment(p), p.shape, gpu, p.pass, opts);
  if (fp.registers_bytes != p.footprint.registers_bytes ||
      fp.sram_bytes != p.footprint.sram_bytes ||
      fp.hbm_traffic_per_step_bytes != p.footprint.hbm_traffic_per_step_bytes ||
      fp.r_matrix_bytes_per_head != p.footprint.r_matrix_bytes_per_head)
    fail("recomputed footprint differs from plan footprint");

  Int reserve = gpu.calibration.reserved_regs_per_thread_bytes * p.threads_per_block;
  if (fp.registers_bytes + reserve > p.register_budget_bytes)
    fail("register footprint exceeds budget");
  Int warps = p.batch.warps * p.gate.warps * p.state.warps;
  Int per_warp = fp.registers_bytes / warps;
  if (per_warp + gpu.calibration.reserved_regs_per_thread_bytes * gpu.warp_size >
      gpu.calibration.max_regs_per_thread_bytes * gpu.warp_size)
    fail("per-thread register use exceeds the cap");
  if (fp.sram_bytes > gpu.sram_usable_per_block_bytes) fail("SRAM footprint exceeds budget");
  return out;
}

ComplexityEstimate complexity_estimate(const RnnShape& shape, Int seq_len) {
  if (seq_len < 0) throw std::invalid_argument("seq_len must be >= 0");
  check_shape(shape);
  ComplexityEstimate c;
  Int d2 = shape.head_dim * shape.head_dim;
  c.flops = 2 * seq_len * shape.num_heads * shape.num_gates * d2 * shape.batch;
  Int d = shape.num_heads * shape.head_dim;
  c.inference_state_bytes =
      shape.num_states * shape.batch * d * shape.dtype.bytes_per_element;
  c.training_state_bytes = ((seq_len + 1) * shape.num_states + seq_len * shape.num_gates) *
                           shape.batch * d * shape.dtype.bytes_per_element;
  return c;
}

namespace {

ordered_json axis_json(const AxisTiling& ax) {
  return ordered_json{{"size_logical", ax.size_logical}, {"size_padded", ax.size_padded},
                      {"elem", ax.elem},                 {"warps", ax.warps},
                      {"blocks", ax.blocks},             {"loops", ax.loops}};
}

}  // namespace

std::string plan_to_json(const TilingPlan& p) {
  ordered_json j;
  j["schema_version"] = 1;
  j["gpu"] = p.gpu;
  j["pass"] = p.pass == Pass::Forward ? "forward" : "backward";
  j["shape"] = ordered_json{{"num_states", p.shape.num_states},
                            {"num_gates", p.shape.num_gates},
                            {"head_dim", p.shape.head_dim},
                            {"num_heads", p.shape.num_heads},
                            {"batch", p.shape.batch},
                            {"dtype", p.shape.dtype.name}};
  j["axes"] = ordered_json{{"B", axis_json(p.batch)},
                           {"G", axis_json(p.gate)},
                           {"S", axis_json(p.state)}};
  j["loops_reg"] = p.loops_reg;
  j["loops_sram"] = p.loops_sram;
  j["register_budget_bytes"] = p.register_budget_bytes;
  j["threads_per_block"] = p.threads_per_block;
  j["grid_blocks"] = p.grid_blocks;
  j["footprint"] = ordered_json{
      {"registers_bytes", p.footprint.registers_bytes},
      {"sram_bytes", p.footprint.sram_bytes},
      {"hbm_traffic_per_step_bytes", p.footprint.hbm_traffic_per_step_bytes},
      {"r_matrix_bytes_per_head", p.footprint.r_matrix_bytes_per_head}};
  return j.dump(2);
}

std::string plan_to_table(const TilingPlan& p) {
  std::ostringstream os;
  os << "tiling plan: " << p.gpu << " "
     << (p.pass == Pass::Forward ? "forward" : "backward") << " pass\n";
  os << "  shape: N_s=" << p.shape.num_states << " N_g=" << p.shape.num_gates
     << " d_head=" << p.shape.head_dim << " heads=" << p.shape.num_heads
     << " batch=" << p.shape.batch << " dtype=" << p.shape.dtype.name << "\n";
  os << "  axis      size  padded  elem  warps  blocks  loops\n";
  for (const AxisTiling* ax : {&p.batch, &p.gate, &p.state}) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-6s %7lld %7lld %5lld %6lld %7lld %6lld\n",
                  ax->axis.c_str(), static_cast<long long>(ax->size_logical),
                  static_cast<long long>(ax->size_padded), static_cast<long long>(ax->elem),
                  static_cast<long long>(ax->warps), static_cast<long long>(ax->blocks),
                  static_cast<long long>(ax->loops));
    os << buf;
  }
  os << "  state loops in registers/SRAM: " << p.loops_reg << "/" << p.loops_sram << "\n";
  os << "  threads per block: " << p.threads_per_block
     << ", grid blocks: " << p.grid_blocks << "\n";
  os << "  registers: " << p.footprint.registers_bytes
     << " B (budget " << p.register_budget_bytes << " B), sram: " << p.footprint.sram_bytes
     << " B\n";
  os << "  hbm traffic per step: " << p.footprint.hbm_traffic_per_step_bytes << " B\n";
  os << "  recurrent matrix per head: " << p.footprint.r_matrix_bytes_per_head << " B\n";
  return os.str();
}

}  // namespace rnnkit::plan
