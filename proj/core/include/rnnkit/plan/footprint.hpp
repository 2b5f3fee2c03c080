#pragma once

#include "rnnkit/plan/rnn_shape.hpp"

namespace rnnkit::plan {

enum class Pass { Forward, Backward };

/// The thirteen tiling quantities. Loop splits are carried offset-by-one
/// (value + 1) because every solver domain is strictly positive while a
/// fully register-resident matrix has zero SRAM loops; the plan reports the
/// true values.
template <class N>
struct TileVars {
  N e_b, w_b, b_b, l_b;          // batch axis
  N e_g, w_g, b_g, l_g;          // gate axis
  N e_s, w_s, b_s;               // state axis (loops come from the split)
  N l_s_reg1, l_s_sram1;         // state-axis loop split, offset by one
};

/// value = plus - minus, with both sides nonnegative polynomials. The split
/// form lets the same terms serve as solver constraints (which only know
/// addition and multiplication) and as the concrete-byte estimator.
template <class N>
struct SplitTerm {
  N plus, minus;
};

template <class N>
struct FootprintPoly {
  SplitTerm<N> registers_block;  // bytes per thread block
  SplitTerm<N> registers_warp;   // bytes per warp (replication factor removed)
  SplitTerm<N> sram_block;       // bytes per thread block
};

/// On-chip byte model of the fused step kernel, written once over a generic
/// numeric type N (int64 for estimation, expression handles for the CSP).
/// `lift` embeds plain integers into N.
///
/// Registers per warp:
///   - recurrent-matrix tiles: the warp iterates an [L_S, L_G] grid of
///     E_S x E_G tiles and keeps the L_S_reg x L_G register share resident:
///       L_S_reg * L_G * E_S * E_G * dtype_bytes
///   - bias tiles (forward) or bias-gradient accumulators (backward), one
///     E_G-wide tile per gate loop:  L_G * E_G * bias_bytes
///   - the matmul accumulator tile:  E_B * E_out * acc_bytes, where E_out is
///     the elementary size of the non-accumulating matrix output axis
///     (gates forward, state gradients backward).
/// Registers per block multiply by the warp count W_B*W_S*W_G; warps along
/// the batch axis replicate the matrix tiles, which is what the replication
/// factor accounts for.
///
/// SRAM per block:
///   - spilled matrix tiles, shared across batch warps:
///       W_S * W_G * L_S_sram * L_G * E_S * (E_G + pad) * dtype_bytes
///   - staged matmul partials for the cross-warp reduction, all warps
///     simultaneously:  W_B*W_S*W_G * E_B * (E_out + pad) * acc_bytes
/// `pad` is the bank-conflict padding in elements per tile row.
template <class N, class Lift>
FootprintPoly<N> footprint_poly(const TileVars<N>& v, Pass pass, Int dtype_bytes,
                                Int acc_bytes, Int pad_elems, Lift lift) {
  N pad = lift(pad_elems);
  N e_out = pass == Pass::Forward ? v.e_g : v.e_s;
  Int bias_bytes = pass == Pass::Forward ? dtype_bytes : acc_bytes;

  N r_tiles_plus = v.l_s_reg1 * v.l_g * v.e_s * v.e_g * lift(dtype_bytes);
  N r_tiles_minus = v.l_g * v.e_s * v.e_g * lift(dtype_bytes);
  N bias = v.l_g * v.e_g * lift(bias_bytes);
  N acc_tile = v.e_b * e_out * lift(acc_bytes);

  N warps = v.w_b * v.w_s * v.w_g;

  FootprintPoly<N> fp{
      /*registers_block=*/{warps * (r_tiles_plus + bias + acc_tile), warps * r_tiles_minus},
      /*registers_warp=*/{r_tiles_plus + bias + acc_tile, r_tiles_minus},
      /*sram_block=*/
      {v.w_s * v.w_g * v.l_s_sram1 * v.l_g * v.e_s * (v.e_g + pad) * lift(dtype_bytes) +
           warps * v.e_b * (e_out + pad) * lift(acc_bytes),
       v.w_s * v.w_g * v.l_g * v.e_s * (v.e_g + pad) * lift(dtype_bytes)},
  };
  return fp;
}

/// HBM bytes moved for one time index across the whole grid (all batch-loop
/// chunks): step inputs and gate writes, state reads for the pointwise and
/// the per-output-tile state reloads of the matmul loop, state writes, and
/// the cross-block partial round trip when the accumulating axis spans
/// blocks.
Int hbm_traffic_per_step(Pass pass, Int s_b, Int s_g, Int s_s, Int num_states,
                         Int e_out_axis, Int blocks_acc_axis, Int dtype_bytes,
                         Int acc_bytes);

}  // namespace rnnkit::plan
