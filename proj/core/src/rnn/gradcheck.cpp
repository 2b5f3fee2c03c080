#include "rnnkit/rnn/gradcheck.hpp"

#include <algorithm>

#include "rnnkit/rnn/random_init.hpp"

namespace rnnkit::rnn {

namespace {

double rel_err(double a, double b, double floor) {
  double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

}  // namespace

GradCheckReport gradient_check(const GradCheckConfig& cfg) {
  CellSpec cell = cell_spec(cfg.variant);
  Rng rng(cfg.seed * 7919 + 13);
  Params<double> params = random_params(cell, cfg.num_heads, cfg.head_dim, rng);
  SequenceBatch<double> batch =
      random_batch(cell, cfg.seq_len, cfg.batch, cfg.num_heads, cfg.head_dim, rng);

  std::vector<double> coeffs(static_cast<std::size_t>(cell.num_states) * cfg.batch *
                             params.dim());
  for (auto& c : coeffs) c = rng.normal();

  auto loss = [&](const Params<double>& p, const SequenceBatch<double>& sb) {
    ForwardTrace<double> tr = forward(cell, p, sb);
    double acc = 0;
    std::size_t k = 0;
    for (int i = 0; i < cell.num_states; ++i)
      for (int b = 0; b < cfg.batch; ++b)
        for (int e = 0; e < sb.dim; ++e, ++k)
          acc += coeffs[k] * tr.states[tr.s_index(sb.seq_len, i, b, e)];
    return acc;
  };

  ForwardTrace<double> tr = forward(cell, params, batch);
  Gradients<double> gr = backward(cell, params, batch, tr, coeffs, ClipPolicy::off());

  double h = cfg.fd_step;
  auto central = [&](double* slot) {
    double keep = *slot;
    *slot = keep + h;
    double up = loss(params, batch);
    *slot = keep - h;
    double down = loss(params, batch);
    *slot = keep;
    return (up - down) / (2 * h);
  };

  GradCheckReport rep;
  for (std::size_t i = 0; i < params.recurrent.size(); ++i) {
    double fd = central(&params.recurrent[i]);
    rep.max_rel_recurrent =
        std::max(rep.max_rel_recurrent, rel_err(fd, gr.d_recurrent[i], cfg.rel_floor));
  }
  for (std::size_t i = 0; i < params.bias.size(); ++i) {
    double fd = central(&params.bias[i]);
    rep.max_rel_bias = std::max(rep.max_rel_bias, rel_err(fd, gr.d_bias[i], cfg.rel_floor));
  }
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    double fd = central(&batch.inputs[i]);
    rep.max_rel_inputs =
        std::max(rep.max_rel_inputs, rel_err(fd, gr.d_inputs[i], cfg.rel_floor));
  }
  for (std::size_t i = 0; i < batch.init_states.size(); ++i) {
    double fd = central(&batch.init_states[i]);
    rep.max_rel_init_states =
        std::max(rep.max_rel_init_states, rel_err(fd, gr.d_init_states[i], cfg.rel_floor));
  }
  return rep;
}

}  // namespace rnnkit::rnn
