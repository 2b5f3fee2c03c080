#pragma once

#include <map>
#include <optional>
#include <string>

#include "rnnkit/csp/solver.hpp"
#include "rnnkit/plan/footprint.hpp"

namespace rnnkit::plan {

struct PlannerOptions {
  // Thread-block size cap: max_threads_per_block / divisor unless overridden.
  Int block_threads_cap_divisor = 4;
  Int block_threads_cap_override = 0;
  // Bank-conflict padding, elements per SRAM tile row (calibration constant).
  Int bank_pad_elements = 1;
  // Axis sizes not divisible by the elementary tile are padded up; when
  // disabled such shapes are rejected.
  bool allow_padding = true;
  // Fixed register budget per block; 0 runs the budget search.
  Int register_budget_override = 0;
  csp::PropagationOptions csp;
};

struct AxisTiling {
  std::string axis;      // "B", "G" or "S"
  Int size_logical = 0;
  Int size_padded = 0;   // elem * warps * blocks * loops
  Int elem = 0;
  Int warps = 0;
  Int blocks = 0;
  Int loops = 0;
};

struct MemoryFootprint {
  Int registers_bytes = 0;          // per thread block, incl. reserved regs
  Int sram_bytes = 0;               // per thread block
  Int hbm_traffic_per_step_bytes = 0;
  Int r_matrix_bytes_per_head = 0;  // N_g * d_head^2 * dtype bytes (logical)
};

struct TilingPlan {
  RnnShape shape;
  std::string gpu;
  Pass pass = Pass::Forward;
  AxisTiling batch, gate, state;
  Int loops_reg = 0;    // register-resident share of the state-axis loops
  Int loops_sram = 0;   // SRAM-resident share; loops_reg + loops_sram = state.loops
  Int register_budget_bytes = 0;
  Int threads_per_block = 0;
  Int grid_blocks = 0;  // batch.blocks * gate.blocks * state.blocks * num_heads
  MemoryFootprint footprint;
};

/// Solved values of the thirteen tiling variables, keyed by name
/// (E_B, W_B, B_B, L_B, E_G, W_G, B_G, L_G, E_S, W_S, B_S, L_S_reg1,
/// L_S_sram1; the last two offset by one).
using TileAssignment = std::map<std::string, Int>;

/// Padded axis sizes for a shape under a pass (see padding policy in the
/// module docs): the accumulating axis pads to the minimum accumulate tile,
/// outer axes to the smallest outer elementary size.
struct PaddedSizes {
  Int s_b = 0, s_g = 0, s_s = 0;
};
PaddedSizes padded_sizes(const RnnShape& shape, const hw::GpuSpec& gpu, Pass pass,
                         const PlannerOptions& opts = {});

/// Encodes the tiling problem as an integer CSP: per-axis factorization
/// equalities, elementary-size membership, thread/grid bounds, and the
/// register/SRAM footprint inequalities of footprint_poly. The heuristic
/// maximizes the block count of the parallel matrix axis and minimizes the
/// accumulating one first, then minimizes loops, then maximizes warps.
csp::CspProblem build_csp(const RnnShape& shape, const hw::GpuSpec& gpu, Pass pass,
                          Int register_budget_bytes, const PlannerOptions& opts = {});

/// Recomputes the byte model from solved tiling values; identical terms to
/// the constraints in build_csp by construction.
MemoryFootprint estimate_footprint(const TileAssignment& vars, const RnnShape& shape,
                                   const hw::GpuSpec& gpu, Pass pass,
                                   const PlannerOptions& opts = {});

/// Solves the tiling CSP at the largest feasible register budget (binary
/// search over [0, register file size]; feasibility is monotone in the
/// budget, so the search degenerates to probing the cap, which is kept as
/// the documented procedure). Returns nullopt when no budget admits a plan.
std::optional<TilingPlan> plan(const RnnShape& shape, const hw::GpuSpec& gpu, Pass pass,
                               const PlannerOptions& opts = {});

/// Every head_dim in [min_dh, max_dh] for which planning succeeds for the
/// forward pass and, when both_passes is set, the backward pass too.
/// Ascending. Feasibility is cached per padded-size class.
std::vector<Int> feasible_head_dims(const RnnShape& base, const hw::GpuSpec& gpu,
                                    bool both_passes, Int min_dh, Int max_dh,
                                    const PlannerOptions& opts = {});

/// Exact re-check of every constraint the plan must satisfy; returns
/// human-readable violations (empty means all residuals are zero).
std::vector<std::string> plan_residuals(const TilingPlan& p, const hw::GpuSpec& gpu,
                                        const PlannerOptions& opts = {});

TileAssignment plan_assignment(const TilingPlan& p);

std::string plan_to_json(const TilingPlan& p);     // schema_version 1
std::string plan_to_table(const TilingPlan& p);    // human-readable summary

}  // namespace rnnkit::plan
