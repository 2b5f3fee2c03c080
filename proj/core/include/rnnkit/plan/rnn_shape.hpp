#pragma once

#include <string>

#include "rnnkit/hw/gpu_spec.hpp"

namespace rnnkit::plan {

using hw::Int;

/// Dimensions of the recurrent workload being planned. The cell family only
/// enters through its state/gate counts, so the planner stays independent of
/// the numeric engine.
struct RnnShape {
  Int num_states = 0;   // N_s
  Int num_gates = 0;    // N_g
  Int head_dim = 0;     // d_head
  Int num_heads = 1;    // embedding dim d = num_heads * head_dim
  Int batch = 0;
  hw::DtypeSpec dtype;
};

struct ComplexityEstimate {
  Int flops = 0;                  // multiply-add counted as 2
  Int inference_state_bytes = 0;  // live state between steps
  Int training_state_bytes = 0;   // stored states + gates for the backward pass
};

/// Matmul-dominant cost model: flops = 2 T N_head N_g d_head^2 b; inference
/// memory is the state itself, training memory keeps all step states/gates.
ComplexityEstimate complexity_estimate(const RnnShape& shape, Int seq_len);

}  // namespace rnnkit::plan
