#pragma once

#include <cstdint>

#include "rnnkit/rnn/engine.hpp"

namespace rnnkit::rnn {

/// Central finite-difference verification of the analytic backward pass on a
/// random instance. The scalar loss is a fixed random weighting of the final
/// states; its gradient seeds the backward call. The oracle side evaluates
/// the forward pass only.
struct GradCheckConfig {
  Variant variant = Variant::Lstm;
  int seq_len = 8;
  int head_dim = 16;
  int num_heads = 2;
  int batch = 4;
  std::uint64_t seed = 0;
  double fd_step = 1e-6;
  // Relative error denominator floor: |a-b| / max(|a|, |b|, floor).
  double rel_floor = 1e-4;
};

struct GradCheckReport {
  double max_rel_inputs = 0;
  double max_rel_bias = 0;
  double max_rel_recurrent = 0;
  double max_rel_init_states = 0;

  double max_rel() const {
    double m = max_rel_inputs;
    if (max_rel_bias > m) m = max_rel_bias;
    if (max_rel_recurrent > m) m = max_rel_recurrent;
    if (max_rel_init_states > m) m = max_rel_init_states;
    return m;
  }
};

GradCheckReport gradient_check(const GradCheckConfig& cfg);

}  // namespace rnnkit::rnn
