#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rnnkit/rnn/engine.hpp"
#include "rnnkit/rnn/rng.hpp"

namespace rnnkit::tasks {

using rnn::CellSpec;
using rnn::Rng;
using rnn::Variant;

struct ParityConfig {
  int train_len_max = 40;       // training lengths uniform in [1, train_len_max]
  int eval_len_min = 40;        // evaluation lengths uniform in [eval_len_min, eval_len_max]
  int eval_len_max = 256;
  int batch_size = 64;
  int steps = 20000;
  int warmup_steps = 1000;      // linear warmup, then cosine decay
  double cosine_floor = 0.1;    // decay target as a fraction of the peak rate
  int eval_every = 500;
  int eval_sequences = 2048;
  // Stop a run once a checkpoint reaches this extrapolation accuracy
  // (0 disables); the reported final accuracy is re-measured on the full
  // evaluation set either way.
  double early_stop_accuracy = 0.995;
  std::uint64_t seed = 1;
};

/// Bit sequences with their XOR labels. Sequences shorter than the batch
/// maximum are zero-padded on the right; `lengths` is the validity mask.
struct ParityBatch {
  int batch = 0;
  int max_len = 0;
  std::vector<std::uint8_t> bits;  // [batch][max_len], entries beyond length are 0
  std::vector<int> lengths;
  std::vector<std::uint8_t> labels;
};

ParityBatch parity_batch(int batch, int len_min, int len_max, Rng& rng);

/// Single recurrent layer: learned 2-row embedding of a bit into the gate
/// pre-activations, the cell, and a linear readout of the hidden state at
/// each sequence's last valid step.
struct ParityModel {
  CellSpec cell;
  rnn::Params<double> params;
  std::vector<double> embed;  // [2][gate][dim]
  std::vector<double> w_out;  // [dim]
  double b_out = 0.0;

  int dim() const { return params.dim(); }
  std::size_t e_index(int bit, int gate, int e) const {
    return (static_cast<std::size_t>(bit) * cell.num_gates + gate) * dim() + e;
  }
};

ParityModel init_parity_model(Variant variant, int head_dim, int num_heads, Rng& rng);

/// Masked-readout accuracy on sequences drawn from [len_min, len_max].
double evaluate_parity(const ParityModel& model, int sequences, int len_min, int len_max,
                       std::uint64_t seed);

struct TrainRun {
  double lr = 0;
  std::uint64_t seed = 0;
  std::vector<double> losses;                       // one entry per step
  std::vector<std::pair<int, double>> eval_curve;   // (step, extrapolation accuracy)
  double final_accuracy = 0;
  int steps_run = 0;
  bool diverged = false;
};

/// Trains with Adam under linear-warmup + cosine decay; gradient flow uses
/// the engine backward with clipping off. Non-finite losses stop the run and
/// are reported, not swallowed.
TrainRun train_parity_run(Variant variant, int head_dim, int num_heads,
                          const ParityConfig& config, double peak_lr, std::uint64_t seed);

struct TrainReport {
  std::vector<TrainRun> runs;
  double best_lr = 0;
  double best_accuracy = 0;  // mean final accuracy over seeds at best_lr
};

TrainReport train_parity(Variant variant, int head_dim, int num_heads,
                         const ParityConfig& config, const std::vector<double>& lrs,
                         const std::vector<std::uint64_t>& seeds);

}  // namespace rnnkit::tasks
