#pragma once

#include "rnnkit/rnn/engine.hpp"
#include "rnnkit/rnn/rng.hpp"

namespace rnnkit::rnn {

/// Gaussian parameters: recurrent entries N(0, (r_scale/sqrt(d_head))^2),
/// biases N(0, bias_scale^2).
inline Params<double> random_params(const CellSpec& cell, int num_heads, int head_dim,
                                    Rng& rng, double r_scale = 1.0,
                                    double bias_scale = 0.1) {
  Params<double> p = Params<double>::zeros(num_heads, head_dim, cell.num_gates);
  double rs = r_scale / std::sqrt(static_cast<double>(head_dim));
  for (auto& v : p.recurrent) v = rs * rng.normal();
  for (auto& v : p.bias) v = bias_scale * rng.normal();
  return p;
}

/// Gaussian inputs and initial states. The sLSTM normalizer state starts
/// strictly positive and its stabilizer starts at zero.
inline SequenceBatch<double> random_batch(const CellSpec& cell, int seq_len, int batch,
                                          int num_heads, int head_dim, Rng& rng,
                                          double input_scale = 1.0,
                                          double state_scale = 0.5) {
  SequenceBatch<double> sb = SequenceBatch<double>::zeros(
      seq_len, batch, cell.num_gates, cell.num_states, num_heads * head_dim);
  for (auto& v : sb.inputs) v = input_scale * rng.normal();
  for (int i = 0; i < cell.num_states; ++i) {
    for (int b = 0; b < batch; ++b) {
      for (int e = 0; e < sb.dim; ++e) {
        double v = state_scale * rng.normal();
        if (cell.variant == Variant::Slstm && i == 2) v = 1.0 + 0.1 * std::abs(v);
        if (cell.variant == Variant::Slstm && i == 3) v = 0.0;
        sb.init_states[sb.s_index(i, b, e)] = v;
      }
    }
  }
  return sb;
}

}  // namespace rnnkit::rnn
