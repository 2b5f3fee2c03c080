#pragma once

#include <array>
#include <optional>
#include <string>

#include "rnnkit/rnn/scalar.hpp"

namespace rnnkit::rnn {

enum class Variant { Elman, Lstm, Gru, Slstm };

/// Static description of a gated-RNN cell family: state/gate counts, which
/// gates read the recurrent term or the external input, and (via the
/// templates below) the pointwise update map and its derivatives.
struct CellSpec {
  Variant variant = Variant::Elman;
  std::string name;
  int num_states = 1;
  int num_gates = 1;
  std::array<bool, 4> gate_uses_recurrent{true, true, true, true};
  std::array<bool, 4> gate_uses_input{true, true, true, true};
};

inline CellSpec cell_spec(Variant v) {
  CellSpec c;
  c.variant = v;
  switch (v) {
    case Variant::Elman:
      c.name = "elman";
      c.num_states = 1;  // h
      c.num_gates = 1;
      break;
    case Variant::Lstm:
      c.name = "lstm";
      c.num_states = 2;  // h, c
      c.num_gates = 4;   // z, f, i, o
      break;
    case Variant::Gru:
      c.name = "gru";
      c.num_states = 1;  // h
      c.num_gates = 4;   // z, r, n, g
      c.gate_uses_recurrent = {true, true, false, true};  // n skips the R term
      c.gate_uses_input = {true, true, true, false};      // g skips the input
      break;
    case Variant::Slstm:
      c.name = "slstm";
      c.num_states = 4;  // h, c, n, m
      c.num_gates = 4;   // z, f, i, o
      break;
  }
  return c;
}

inline std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "elman") return Variant::Elman;
  if (name == "lstm") return Variant::Lstm;
  if (name == "gru") return Variant::Gru;
  if (name == "slstm") return Variant::Slstm;
  return std::nullopt;
}

/// New states from previous states and gate pre-activations, one cell
/// element at a time. State and gate layouts follow cell_spec ordering.
template <class S>
void pointwise_forward(const CellSpec& cell, const S* prev, const S* gates, S* next) {
  using namespace num;
  switch (cell.variant) {
    case Variant::Elman: {
      next[0] = tanh_(gates[0]);
      break;
    }
    case Variant::Lstm: {
      S c = sigmoid(gates[1]) * prev[1] + sigmoid(gates[2]) * tanh_(gates[0]);
      next[0] = sigmoid(gates[3]) * tanh_(c);
      next[1] = c;
      break;
    }
    case Variant::Gru: {
      S sz = sigmoid(gates[0]);
      S inner = gates[2] + sigmoid(gates[1]) * tanh_(gates[3]);
      next[0] = sz * prev[0] + (S(1) - sz) * tanh_(inner);
      break;
    }
    case Variant::Slstm: {
      S a = log_sigmoid(gates[1]) + prev[3];  // log sigma(f) + m_prev
      S m = max_(a, gates[2]);
      S fexp = exp_(a - m);
      S iexp = exp_(gates[2] - m);
      S c = fexp * prev[1] + iexp * tanh_(gates[0]);
      S n = fexp * prev[2] + iexp;
      next[0] = sigmoid(gates[3]) * (c / n);
      next[1] = c;
      next[2] = n;
      next[3] = m;
      break;
    }
  }
}

template <class S>
struct PointwiseJacobian {
  // d new_state[i] / d gate[j] and d new_state[i] / d prev_state[k].
  std::array<std::array<S, 4>, 4> d_gate{};
  std::array<std::array<S, 4>, 4> d_prev{};
};

template <class S>
PointwiseJacobian<S> pointwise_jacobians(const CellSpec& cell, const S* prev,
                                         const S* gates) {
  using namespace num;
  PointwiseJacobian<S> J;
  switch (cell.variant) {
    case Variant::Elman: {
      S t = tanh_(gates[0]);
      J.d_gate[0][0] = S(1) - t * t;
      break;
    }
    case Variant::Lstm: {
      S sf = sigmoid(gates[1]), si = sigmoid(gates[2]), so = sigmoid(gates[3]);
      S tz = tanh_(gates[0]);
      S c = sf * prev[1] + si * tz;
      S tc = tanh_(c);
      S dtc = S(1) - tc * tc;
      // c row (state 1)
      J.d_gate[1][0] = si * (S(1) - tz * tz);
      J.d_gate[1][1] = sf * (S(1) - sf) * prev[1];
      J.d_gate[1][2] = si * (S(1) - si) * tz;
      J.d_prev[1][1] = sf;
      // h row (state 0) chains through c
      for (int j = 0; j < 3; ++j) J.d_gate[0][j] = so * dtc * J.d_gate[1][j];
      J.d_gate[0][3] = so * (S(1) - so) * tc;
      J.d_prev[0][1] = so * dtc * sf;
      break;
    }
    case Variant::Gru: {
      S sz = sigmoid(gates[0]), sr = sigmoid(gates[1]);
      S tg = tanh_(gates[3]);
      S u = gates[2] + sr * tg;
      S tu = tanh_(u);
      S dtu = S(1) - tu * tu;
      S one_minus_sz = S(1) - sz;
      J.d_gate[0][0] = sz * (S(1) - sz) * (prev[0] - tu);
      J.d_gate[0][1] = one_minus_sz * dtu * sr * (S(1) - sr) * tg;
      J.d_gate[0][2] = one_minus_sz * dtu;
      J.d_gate[0][3] = one_minus_sz * dtu * sr * (S(1) - tg * tg);
      J.d_prev[0][0] = sz;
      break;
    }
    case Variant::Slstm: {
      S sf = sigmoid(gates[1]), so = sigmoid(gates[3]);
      S a = log_sigmoid(gates[1]) + prev[3];
      bool use_a = !(a < gates[2]);  // ties resolve to the forget branch
      S m = use_a ? a : gates[2];
      S fexp = exp_(a - m);
      S iexp = exp_(gates[2] - m);
      S tz = tanh_(gates[0]);
      S c = fexp * prev[1] + iexp * tz;
      S n = fexp * prev[2] + iexp;

      S da_df = S(1) - sf;
      S dm_df = use_a ? da_df : S(0);
      S dm_di = use_a ? S(0) : S(1);
      S dm_dmp = use_a ? S(1) : S(0);

      // d fexp / dx = fexp * (da_dx - dm_dx); d iexp / dx = iexp * (db_dx - dm_dx)
      S dfexp_df = fexp * (da_df - dm_df);
      S diexp_df = -iexp * dm_df;
      S dfexp_di = -fexp * dm_di;
      S diexp_di = iexp * (S(1) - dm_di);
      S dfexp_dmp = fexp * (S(1) - dm_dmp);
      S diexp_dmp = -iexp * dm_dmp;

      // c row (state 1)
      J.d_gate[1][0] = iexp * (S(1) - tz * tz);
      J.d_gate[1][1] = dfexp_df * prev[1] + diexp_df * tz;
      J.d_gate[1][2] = dfexp_di * prev[1] + diexp_di * tz;
      J.d_prev[1][1] = fexp;
      J.d_prev[1][3] = dfexp_dmp * prev[1] + diexp_dmp * tz;
      // n row (state 2)
      J.d_gate[2][1] = dfexp_df * prev[2] + diexp_df;
      J.d_gate[2][2] = dfexp_di * prev[2] + diexp_di;
      J.d_prev[2][2] = fexp;
      J.d_prev[2][3] = dfexp_dmp * prev[2] + diexp_dmp;
      // m row (state 3)
      J.d_gate[3][1] = dm_df;
      J.d_gate[3][2] = dm_di;
      J.d_prev[3][3] = dm_dmp;
      // h row (state 0): h = sigma(o) * c / n
      S inv_n = S(1) / n;
      S h_over = c * inv_n;
      for (int j = 0; j < 4; ++j)
        J.d_gate[0][j] = so * (J.d_gate[1][j] - h_over * J.d_gate[2][j]) * inv_n;
      J.d_gate[0][3] = J.d_gate[0][3] + so * (S(1) - so) * h_over;
      for (int k = 0; k < 4; ++k)
        J.d_prev[0][k] = so * (J.d_prev[1][k] - h_over * J.d_prev[2][k]) * inv_n;
      break;
    }
  }
  return J;
}

}  // namespace rnnkit::rnn
