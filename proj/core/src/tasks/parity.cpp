#include "rnnkit/tasks/parity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rnnkit/rnn/random_init.hpp"

namespace rnnkit::tasks {

using rnn::ClipPolicy;
using rnn::ForwardTrace;
using rnn::Gradients;
using rnn::SequenceBatch;
using rnn::StepGradients;

ParityBatch parity_batch(int batch, int len_min, int len_max, Rng& rng) {
  if (batch < 1 || len_min < 1 || len_max < len_min)
    throw std::invalid_argument("bad parity batch arguments");
  ParityBatch pb;
  pb.batch = batch;
  pb.lengths.resize(static_cast<std::size_t>(batch));
  pb.labels.resize(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b)
    pb.lengths[static_cast<std::size_t>(b)] =
        static_cast<int>(rng.uniform_int(len_min, len_max));
  pb.max_len = *std::max_element(pb.lengths.begin(), pb.lengths.end());
  pb.bits.assign(static_cast<std::size_t>(batch) * pb.max_len, 0);
  for (int b = 0; b < batch; ++b) {
    int acc = 0;
    for (int t = 0; t < pb.lengths[static_cast<std::size_t>(b)]; ++t) {
      int bit = rng.bit();
      pb.bits[static_cast<std::size_t>(b) * pb.max_len + t] = static_cast<std::uint8_t>(bit);
      acc ^= bit;
    }
    pb.labels[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(acc);
  }
  return pb;
}

ParityModel init_parity_model(Variant variant, int head_dim, int num_heads, Rng& rng) {
  ParityModel m;
  m.cell = rnn::cell_spec(variant);
  m.params = rnn::random_params(m.cell, num_heads, head_dim, rng, 1.0, 0.0);
  int d = m.params.dim();
  m.embed.resize(static_cast<std::size_t>(2) * m.cell.num_gates * d);
  for (auto& v : m.embed) v = 0.3 * rng.normal();
  m.w_out.resize(static_cast<std::size_t>(d));
  for (auto& v : m.w_out) v = rng.normal() / std::sqrt(static_cast<double>(d));
  m.b_out = 0.0;
  return m;
}

namespace {

SequenceBatch<double> embed_batch(const ParityModel& m, const ParityBatch& pb) {
  int d = m.dim();
  SequenceBatch<double> sb = SequenceBatch<double>::zeros(
      pb.max_len, pb.batch, m.cell.num_gates, m.cell.num_states, d);
  for (int t = 0; t < pb.max_len; ++t) {
    for (int b = 0; b < pb.batch; ++b) {
      if (t >= pb.lengths[static_cast<std::size_t>(b)]) continue;  // padding stays zero
      int bit = pb.bits[static_cast<std::size_t>(b) * pb.max_len + t];
      for (int j = 0; j < m.cell.num_gates; ++j) {
        if (!m.cell.gate_uses_input[static_cast<std::size_t>(j)]) continue;
        for (int e = 0; e < d; ++e)
          sb.inputs[sb.x_index(t, b, j, e)] = m.embed[m.e_index(bit, j, e)];
      }
    }
  }
  // sLSTM normalizer must start positive.
  if (m.cell.variant == Variant::Slstm)
    for (int b = 0; b < pb.batch; ++b)
      for (int e = 0; e < d; ++e) sb.init_states[sb.s_index(2, b, e)] = 1.0;
  return sb;
}

std::vector<double> readout_logits(const ParityModel& m, const ForwardTrace<double>& tr,
                                   const ParityBatch& pb) {
  std::vector<double> logits(static_cast<std::size_t>(pb.batch));
  for (int b = 0; b < pb.batch; ++b) {
    int last = pb.lengths[static_cast<std::size_t>(b)];
    double acc = m.b_out;
    for (int e = 0; e < m.dim(); ++e)
      acc += m.w_out[static_cast<std::size_t>(e)] * tr.states[tr.s_index(last, 0, b, e)];
    logits[static_cast<std::size_t>(b)] = acc;
  }
  return logits;
}

// Adam over one flat parameter view.
struct Adam {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long t = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double*>& params, const std::vector<double>& grads, double lr) {
    ++t;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grads[i];
      m[i] = beta1 * m[i] + (1 - beta1) * g;
      v[i] = beta2 * v[i] + (1 - beta2) * g * g;
      *params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

double schedule_lr(double peak, int step, const ParityConfig& cfg) {
  if (step < cfg.warmup_steps)
    return peak * static_cast<double>(step + 1) / cfg.warmup_steps;
  double total = std::max(1, cfg.steps - cfg.warmup_steps);
  double progress = static_cast<double>(step - cfg.warmup_steps) / total;
  double floor = cfg.cosine_floor;
  return peak * (floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(M_PI * progress)));
}

}  // namespace

double evaluate_parity(const ParityModel& m, int sequences, int len_min, int len_max,
                       std::uint64_t seed) {
  Rng rng(seed);
  int correct = 0, total = 0;
  int chunk = 64;
  while (total < sequences) {
    int n = std::min(chunk, sequences - total);
    ParityBatch pb = parity_batch(n, len_min, len_max, rng);
    SequenceBatch<double> sb = embed_batch(m, pb);
    ForwardTrace<double> tr = rnn::forward(m.cell, m.params, sb);
    std::vector<double> logits = readout_logits(m, tr, pb);
    for (int b = 0; b < n; ++b) {
      int pred = logits[static_cast<std::size_t>(b)] > 0.0 ? 1 : 0;
      if (pred == pb.labels[static_cast<std::size_t>(b)]) ++correct;
    }
    total += n;
  }
  return static_cast<double>(correct) / total;
}

TrainRun train_parity_run(Variant variant, int head_dim, int num_heads,
                          const ParityConfig& cfg, double peak_lr, std::uint64_t seed) {
  Rng model_rng(seed);
  ParityModel m = init_parity_model(variant, head_dim, num_heads, model_rng);
  Rng data_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uint64_t eval_seed = seed ^ 0xc2b2ae3d27d4eb4fULL;

  TrainRun run;
  run.lr = peak_lr;
  run.seed = seed;

  // Flat parameter/gradient views in a fixed order.
  std::vector<double*> slots;
  for (auto& v : m.params.recurrent) slots.push_back(&v);
  for (auto& v : m.params.bias) slots.push_back(&v);
  for (auto& v : m.embed) slots.push_back(&v);
  for (auto& v : m.w_out) slots.push_back(&v);
  slots.push_back(&m.b_out);
  Adam opt(slots.size());
  std::vector<double> grads(slots.size(), 0.0);

  int d = m.dim();
  for (int step = 0; step < cfg.steps; ++step) {
    ParityBatch pb = parity_batch(cfg.batch_size, 1, cfg.train_len_max, data_rng);
    SequenceBatch<double> sb = embed_batch(m, pb);
    ForwardTrace<double> tr = rnn::forward(m.cell, m.params, sb);
    std::vector<double> logits = readout_logits(m, tr, pb);

    double loss = 0.0;
    std::vector<double> dlogit(static_cast<std::size_t>(pb.batch));
    for (int b = 0; b < pb.batch; ++b) {
      double z = logits[static_cast<std::size_t>(b)];
      double y = pb.labels[static_cast<std::size_t>(b)];
      // softplus(z) - y z, computed stably
      loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y * z;
      double sig = 1.0 / (1.0 + std::exp(-z));
      dlogit[static_cast<std::size_t>(b)] = (sig - y) / pb.batch;
    }
    loss /= pb.batch;
    run.losses.push_back(loss);
    run.steps_run = step + 1;
    if (!std::isfinite(loss)) {
      run.diverged = true;
      break;
    }

    // Readout gradients, injected at each sequence's last valid step.
    StepGradients<double> inject;
    inject.hidden.assign(static_cast<std::size_t>(pb.max_len) * pb.batch * d, 0.0);
    std::vector<double> d_w(static_cast<std::size_t>(d), 0.0);
    double d_b = 0.0;
    for (int b = 0; b < pb.batch; ++b) {
      int last = pb.lengths[static_cast<std::size_t>(b)];
      double g = dlogit[static_cast<std::size_t>(b)];
      for (int e = 0; e < d; ++e) {
        inject.hidden[(static_cast<std::size_t>(last - 1) * pb.batch + b) * d + e] +=
            g * m.w_out[static_cast<std::size_t>(e)];
        d_w[static_cast<std::size_t>(e)] += g * tr.states[tr.s_index(last, 0, b, e)];
      }
      d_b += g;
    }

    std::vector<double> zero_terminal(
        static_cast<std::size_t>(m.cell.num_states) * pb.batch * d, 0.0);
    Gradients<double> gr = rnn::backward(m.cell, m.params, sb, tr, zero_terminal,
                                         ClipPolicy::off(), &inject);

    // Embedding gradient: sum input gradients per bit value.
    std::vector<double> d_embed(m.embed.size(), 0.0);
    for (int t = 0; t < pb.max_len; ++t)
      for (int b = 0; b < pb.batch; ++b) {
        if (t >= pb.lengths[static_cast<std::size_t>(b)]) continue;
        int bit = pb.bits[static_cast<std::size_t>(b) * pb.max_len + t];
        for (int j = 0; j < m.cell.num_gates; ++j) {
          if (!m.cell.gate_uses_input[static_cast<std::size_t>(j)]) continue;
          for (int e = 0; e < d; ++e)
            d_embed[m.e_index(bit, j, e)] += gr.d_inputs[sb.x_index(t, b, j, e)];
        }
      }

    std::size_t k = 0;
    for (double g : gr.d_recurrent) grads[k++] = g;
    for (double g : gr.d_bias) grads[k++] = g;
    for (double g : d_embed) grads[k++] = g;
    for (double g : d_w) grads[k++] = g;
    grads[k++] = d_b;

    opt.step(slots, grads, schedule_lr(peak_lr, step, cfg));

    if (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0) {
      double acc = evaluate_parity(m, std::min(cfg.eval_sequences, 256), cfg.eval_len_min,
                                   cfg.eval_len_max, eval_seed);
      run.eval_curve.emplace_back(step + 1, acc);
      if (cfg.early_stop_accuracy > 0 && acc >= cfg.early_stop_accuracy) break;
    }
  }

  run.final_accuracy = run.diverged
                           ? 0.0
                           : evaluate_parity(m, cfg.eval_sequences, cfg.eval_len_min,
                                             cfg.eval_len_max, eval_seed + 1);
  return run;
}

TrainReport train_parity(Variant variant, int head_dim, int num_heads,
                         const ParityConfig& cfg, const std::vector<double>& lrs,
                         const std::vector<std::uint64_t>& seeds) {
  if (lrs.empty() || seeds.empty())
    throw std::invalid_argument("need at least one learning rate and one seed");
  TrainReport report;
  for (double lr : lrs)
    for (std::uint64_t seed : seeds)
      report.runs.push_back(train_parity_run(variant, head_dim, num_heads, cfg, lr, seed));

  report.best_accuracy = -1.0;
  for (double lr : lrs) {
    double acc = 0.0;
    int n = 0;
    for (const auto& r : report.runs)
      if (r.lr == lr) {
        acc += r.final_accuracy;
        ++n;
      }
    acc /= n;
    if (acc > report.best_accuracy) {
      report.best_accuracy = acc;
      report.best_lr = lr;
    }
  }
  return report;
}

}  // namespace rnnkit::tasks
