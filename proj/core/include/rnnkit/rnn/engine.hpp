#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rnnkit/rnn/cell.hpp"

namespace rnnkit::rnn {

/// Learnable parameters. The full-width recurrent matrix is block-diagonal
/// with one d_head x d_head block per head and per gate; only the blocks are
/// stored. Gate inputs already include the external projection W x, which is
/// applied outside the engine.
template <class S>
struct Params {
  int num_heads = 1;
  int head_dim = 0;
  int num_gates = 1;
  std::vector<S> recurrent;  // [head][gate][row][col]
  std::vector<S> bias;       // [gate][dim], dim = num_heads * head_dim

  int dim() const { return num_heads * head_dim; }
  std::size_t r_index(int head, int gate, int row, int col) const {
    return ((static_cast<std::size_t>(head) * static_cast<std::size_t>(num_gates) + gate) *
                head_dim + row) * head_dim + col;
  }
  std::size_t b_index(int gate, int e) const {
    return static_cast<std::size_t>(gate) * dim() + e;
  }
  static Params zeros(int num_heads, int head_dim, int num_gates) {
    Params p;
    p.num_heads = num_heads;
    p.head_dim = head_dim;
    p.num_gates = num_gates;
    p.recurrent.assign(static_cast<std::size_t>(num_heads) * num_gates * head_dim * head_dim,
                       S(0));
    p.bias.assign(static_cast<std::size_t>(num_gates) * num_heads * head_dim, S(0));
    return p;
  }
};

template <class S>
struct SequenceBatch {
  int seq_len = 0;
  int batch = 0;
  int num_gates = 1;
  int num_states = 1;
  int dim = 0;
  std::vector<S> inputs;       // [T][batch][gate][dim]
  std::vector<S> init_states;  // [state][batch][dim]

  std::size_t x_index(int t, int b, int gate, int e) const {
    return ((static_cast<std::size_t>(t) * batch + b) * num_gates + gate) * dim + e;
  }
  std::size_t s_index(int state, int b, int e) const {
    return (static_cast<std::size_t>(state) * batch + b) * dim + e;
  }
  static SequenceBatch zeros(int seq_len, int batch, int num_gates, int num_states, int dim) {
    SequenceBatch sb;
    sb.seq_len = seq_len;
    sb.batch = batch;
    sb.num_gates = num_gates;
    sb.num_states = num_states;
    sb.dim = dim;
    sb.inputs.assign(static_cast<std::size_t>(seq_len) * batch * num_gates * dim, S(0));
    sb.init_states.assign(static_cast<std::size_t>(num_states) * batch * dim, S(0));
    return sb;
  }
};

/// All step states (index 0 holds the initial state) and gate activations,
/// written out for the backward pass.
template <class S>
struct ForwardTrace {
  int seq_len = 0;
  int batch = 0;
  int num_states = 1;
  int num_gates = 1;
  int dim = 0;
  std::vector<S> states;  // [T+1][state][batch][dim]
  std::vector<S> gates;   // [T][gate][batch][dim]

  std::size_t s_index(int t, int state, int b, int e) const {
    return ((static_cast<std::size_t>(t) * num_states + state) * batch + b) * dim + e;
  }
  std::size_t g_index(int t, int gate, int b, int e) const {
    return ((static_cast<std::size_t>(t) * num_gates + gate) * batch + b) * dim + e;
  }
};

template <class S>
struct Gradients {
  std::vector<S> d_inputs;       // [T][batch][gate][dim]
  std::vector<S> d_bias;         // [gate][dim]
  std::vector<S> d_recurrent;    // [head][gate][row][col]
  std::vector<S> d_init_states;  // [state][batch][dim]
};

struct ClipPolicy {
  enum class Mode { Off, ClipValue, Zero };
  Mode mode = Mode::Off;
  double magnitude = 0.0;

  static ClipPolicy off() { return {Mode::Off, 0.0}; }
  static ClipPolicy value(double m) {
    if (m <= 0) throw std::invalid_argument("clip magnitude must be positive");
    return {Mode::ClipValue, m};
  }
  static ClipPolicy zero() { return {Mode::Zero, 0.0}; }
};

namespace detail {

template <class S>
void check_shapes(const CellSpec& cell, const Params<S>& p, const SequenceBatch<S>& sb) {
  if (p.num_gates != cell.num_gates || sb.num_gates != cell.num_gates ||
      sb.num_states != cell.num_states)
    throw std::invalid_argument("cell/params/batch gate or state counts disagree");
  if (sb.dim != p.dim()) throw std::invalid_argument("batch dim != params dim");
  if (p.head_dim < 1 || sb.seq_len < 0 || sb.batch < 1)
    throw std::invalid_argument("degenerate shape");
  if (p.recurrent.size() != static_cast<std::size_t>(p.num_heads) * p.num_gates *
                                p.head_dim * p.head_dim ||
      p.bias.size() != static_cast<std::size_t>(p.num_gates) * p.dim() ||
      sb.inputs.size() != static_cast<std::size_t>(sb.seq_len) * sb.batch * sb.num_gates * sb.dim ||
      sb.init_states.size() != static_cast<std::size_t>(sb.num_states) * sb.batch * sb.dim)
    throw std::invalid_argument("tensor storage size mismatch");
}

template <class S>
void check_finite(const std::vector<S>& v, const char* what) {
  for (const S& x : v)
    if (!num::finite(x)) throw std::invalid_argument(std::string("non-finite ") + what);
}

}  // namespace detail

/// Runs the gated recurrence: per step, gate pre-activations from the input,
/// the block-diagonal recurrent term on the hidden state, and the bias; then
/// the cell's pointwise update. Summation over the recurrent axis is plain
/// ascending order so runs are bit-reproducible; heads never mix.
template <class S>
ForwardTrace<S> forward(const CellSpec& cell, const Params<S>& p, const SequenceBatch<S>& sb) {
  detail::check_shapes(cell, p, sb);
  detail::check_finite(sb.inputs, "input");
  detail::check_finite(sb.init_states, "initial state");

  const int T = sb.seq_len, B = sb.batch, D = sb.dim;
  const int NS = cell.num_states, NG = cell.num_gates, DH = p.head_dim;

  ForwardTrace<S> tr;
  tr.seq_len = T;
  tr.batch = B;
  tr.num_states = NS;
  tr.num_gates = NG;
  tr.dim = D;
  tr.states.assign(static_cast<std::size_t>(T + 1) * NS * B * D, S(0));
  tr.gates.assign(static_cast<std::size_t>(T) * NG * B * D, S(0));

  for (int i = 0; i < NS; ++i)
    for (int b = 0; b < B; ++b)
      for (int e = 0; e < D; ++e)
        tr.states[tr.s_index(0, i, b, e)] = sb.init_states[sb.s_index(i, b, e)];

  std::vector<S> prev(static_cast<std::size_t>(NS));
  std::vector<S> g(static_cast<std::size_t>(NG));
  std::vector<S> next(static_cast<std::size_t>(NS));

  for (int t = 0; t < T; ++t) {
    const S* s_prev = &tr.states[tr.s_index(t, 0, 0, 0)];
    for (int j = 0; j < NG; ++j) {
      for (int b = 0; b < B; ++b) {
        for (int hd = 0; hd < p.num_heads; ++hd) {
          for (int r = 0; r < DH; ++r) {
            int e = hd * DH + r;
            S y = S(0);
            if (cell.gate_uses_recurrent[static_cast<std::size_t>(j)]) {
              const S* row = &p.recurrent[p.r_index(hd, j, r, 0)];
              const S* sp = s_prev + static_cast<std::size_t>(b) * D + hd * DH;
              for (int c = 0; c < DH; ++c) y += row[c] * sp[c];
            }
            S acc = cell.gate_uses_input[static_cast<std::size_t>(j)]
                        ? sb.inputs[sb.x_index(t, b, j, e)]
                        : S(0);
            acc += p.bias[p.b_index(j, e)];
            acc += y;
            tr.gates[tr.g_index(t, j, b, e)] = acc;
          }
        }
      }
    }
    for (int b = 0; b < B; ++b) {
      for (int e = 0; e < D; ++e) {
        for (int i = 0; i < NS; ++i) prev[static_cast<std::size_t>(i)] = tr.states[tr.s_index(t, i, b, e)];
        for (int j = 0; j < NG; ++j) g[static_cast<std::size_t>(j)] = tr.gates[tr.g_index(t, j, b, e)];
        pointwise_forward(cell, prev.data(), g.data(), next.data());
        for (int i = 0; i < NS; ++i) tr.states[tr.s_index(t + 1, i, b, e)] = next[static_cast<std::size_t>(i)];
      }
    }
  }
  return tr;
}

/// Optional extra loss gradients entering mid-sequence (e.g. a readout of
/// the hidden state at a per-sequence final step). hidden[t][b][e] is added
/// to the hidden-state gradient at step t+1 (states index t+1).
template <class S>
struct StepGradients {
  std::vector<S> hidden;  // [T][batch][dim]; empty means none
};

/// Back-propagation through time. Iterates steps backwards: gate gradients
/// through the pointwise Jacobian, previous-state gradients through the
/// state Jacobian plus (for the hidden state) the transposed recurrent term,
/// which the clip policy clamps or cuts elementwise before it is added.
/// Accumulates bias gradients (sum of gate gradients over time), recurrent
/// gradients (sum of outer products with the pre-step hidden state), input
/// gradients (the gate gradients, for gates wired to the input), and the
/// initial-state gradients.
template <class S>
Gradients<S> backward(const CellSpec& cell, const Params<S>& p, const SequenceBatch<S>& sb,
                      const ForwardTrace<S>& tr, const std::vector<S>& d_states_final,
                      const ClipPolicy& clip = ClipPolicy::off(),
                      const StepGradients<S>* extra = nullptr) {
  detail::check_shapes(cell, p, sb);
  const int T = sb.seq_len, B = sb.batch, D = sb.dim;
  const int NS = cell.num_states, NG = cell.num_gates, DH = p.head_dim;
  if (tr.seq_len != T || tr.batch != B || tr.dim != D || tr.num_states != NS ||
      tr.num_gates != NG)
    throw std::invalid_argument("trace does not match batch");
  if (d_states_final.size() != static_cast<std::size_t>(NS) * B * D)
    throw std::invalid_argument("terminal state gradient has wrong size");
  if (extra && !extra->hidden.empty() &&
      extra->hidden.size() != static_cast<std::size_t>(T) * B * D)
    throw std::invalid_argument("per-step hidden gradients have wrong size");

  Gradients<S> gr;
  gr.d_inputs.assign(sb.inputs.size(), S(0));
  gr.d_bias.assign(p.bias.size(), S(0));
  gr.d_recurrent.assign(p.recurrent.size(), S(0));
  gr.d_init_states.assign(d_states_final.size(), S(0));

  auto ds_index = [B, D](int state, int b, int e) {
    return (static_cast<std::size_t>(state) * B + b) * D + e;
  };

  std::vector<S> ds_cur = d_states_final;      // gradient w.r.t. states at step t+1
  std::vector<S> ds_prev(ds_cur.size(), S(0));
  std::vector<S> dg(static_cast<std::size_t>(NG) * B * D, S(0));
  std::vector<S> prev(static_cast<std::size_t>(NS));
  std::vector<S> g(static_cast<std::size_t>(NG));
  std::vector<S> dsl(static_cast<std::size_t>(NS));

  const S mag = num::from_double<S>(clip.magnitude);

  for (int t = T - 1; t >= 0; --t) {
    if (extra && !extra->hidden.empty()) {
      for (int b = 0; b < B; ++b)
        for (int e = 0; e < D; ++e)
          ds_cur[ds_index(0, b, e)] +=
              extra->hidden[(static_cast<std::size_t>(t) * B + b) * D + e];
    }
    std::fill(ds_prev.begin(), ds_prev.end(), S(0));

    // Pointwise Jacobian: gate gradients and the state-to-state part.
    for (int b = 0; b < B; ++b) {
      for (int e = 0; e < D; ++e) {
        for (int i = 0; i < NS; ++i) {
          prev[static_cast<std::size_t>(i)] = tr.states[tr.s_index(t, i, b, e)];
          dsl[static_cast<std::size_t>(i)] = ds_cur[ds_index(i, b, e)];
        }
        for (int j = 0; j < NG; ++j) g[static_cast<std::size_t>(j)] = tr.gates[tr.g_index(t, j, b, e)];
        PointwiseJacobian<S> J = pointwise_jacobians(cell, prev.data(), g.data());
        for (int j = 0; j < NG; ++j) {
          S acc = S(0);
          for (int i = 0; i < NS; ++i) acc += J.d_gate[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * dsl[static_cast<std::size_t>(i)];
          dg[(static_cast<std::size_t>(j) * B + b) * D + e] = acc;
        }
        for (int k = 0; k < NS; ++k) {
          S acc = S(0);
          for (int i = 0; i < NS; ++i) acc += J.d_prev[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * dsl[static_cast<std::size_t>(i)];
          ds_prev[ds_index(k, b, e)] = acc;
        }
      }
    }

    // Recurrent term: ds_hidden += clip(R^T dg), per head.
    if (clip.mode != ClipPolicy::Mode::Zero) {
      for (int b = 0; b < B; ++b) {
        for (int hd = 0; hd < p.num_heads; ++hd) {
          for (int c = 0; c < DH; ++c) {
            S term = S(0);
            for (int j = 0; j < NG; ++j) {
              if (!cell.gate_uses_recurrent[static_cast<std::size_t>(j)]) continue;
              const S* dgj = &dg[(static_cast<std::size_t>(j) * B + b) * D + hd * DH];
              for (int r = 0; r < DH; ++r)
                term += p.recurrent[p.r_index(hd, j, r, c)] * dgj[r];
            }
            if (clip.mode == ClipPolicy::Mode::ClipValue) {
              if (term > mag) term = mag;
              if (term < -mag) term = -mag;
            }
            ds_prev[ds_index(0, b, hd * DH + c)] += term;
          }
        }
      }
    }

    // Parameter and input gradients for this step.
    for (int j = 0; j < NG; ++j) {
      bool wired = cell.gate_uses_input[static_cast<std::size_t>(j)];
      for (int b = 0; b < B; ++b) {
        for (int e = 0; e < D; ++e) {
          S v = dg[(static_cast<std::size_t>(j) * B + b) * D + e];
          if (wired) gr.d_inputs[sb.x_index(t, b, j, e)] = v;
          gr.d_bias[p.b_index(j, e)] += v;
        }
      }
    }
    for (int hd = 0; hd < p.num_heads; ++hd) {
      for (int j = 0; j < NG; ++j) {
        if (!cell.gate_uses_recurrent[static_cast<std::size_t>(j)]) continue;
        for (int r = 0; r < DH; ++r) {
          for (int c = 0; c < DH; ++c) {
            S acc = S(0);
            for (int b = 0; b < B; ++b)
              acc += dg[(static_cast<std::size_t>(j) * B + b) * D + hd * DH + r] *
                     tr.states[tr.s_index(t, 0, b, hd * DH + c)];
            gr.d_recurrent[p.r_index(hd, j, r, c)] += acc;
          }
        }
      }
    }
    std::swap(ds_cur, ds_prev);
  }
  gr.d_init_states = ds_cur;
  return gr;
}

/// Max absolute state deviation between the per-head forward and a
/// single-head forward over the explicitly assembled block-diagonal matrix.
double forward_blockdiag_equivalence_check(const CellSpec& cell, const Params<double>& p,
                                           const SequenceBatch<double>& sb);

struct DriftRow {
  int t = 0;
  double p50 = 0, p90 = 0, p100 = 0;
};

/// Runs the same sequence in float64 and in a low-precision mode ("fp32" or
/// emulated "bf16"), returning per-step percentiles of the absolute hidden
/// state error across batch and hidden dimensions (nearest-rank).
std::vector<DriftRow> precision_drift_report(const CellSpec& cell, const Params<double>& p,
                                             const SequenceBatch<double>& sb,
                                             const std::string& low_dtype);

std::string drift_to_csv(const std::vector<DriftRow>& rows);

}  // namespace rnnkit::rnn
