#include "rnnkit/rnn/engine.hpp"

#include <algorithm>
#include <sstream>

namespace rnnkit::rnn {

namespace {

template <class S>
Params<S> cast_params(const Params<double>& p) {
  Params<S> out;
  out.num_heads = p.num_heads;
  out.head_dim = p.head_dim;
  out.num_gates = p.num_gates;
  out.recurrent.reserve(p.recurrent.size());
  for (double v : p.recurrent) out.recurrent.push_back(S(v));
  out.bias.reserve(p.bias.size());
  for (double v : p.bias) out.bias.push_back(S(v));
  return out;
}

template <class S>
SequenceBatch<S> cast_batch(const SequenceBatch<double>& sb) {
  SequenceBatch<S> out;
  out.seq_len = sb.seq_len;
  out.batch = sb.batch;
  out.num_gates = sb.num_gates;
  out.num_states = sb.num_states;
  out.dim = sb.dim;
  out.inputs.reserve(sb.inputs.size());
  for (double v : sb.inputs) out.inputs.push_back(S(v));
  out.init_states.reserve(sb.init_states.size());
  for (double v : sb.init_states) out.init_states.push_back(S(v));
  return out;
}

double nearest_rank(std::vector<double>& sorted_scratch, double pct) {
  std::size_t n = sorted_scratch.size();
  std::size_t k = static_cast<std::size_t>(std::max(
      1.0, std::ceil(pct / 100.0 * static_cast<double>(n))));
  return sorted_scratch[std::min(k, n) - 1];
}

template <class SLow>
std::vector<DriftRow> drift_impl(const CellSpec& cell, const Params<double>& p,
                                 const SequenceBatch<double>& sb) {
  ForwardTrace<double> ref = forward(cell, p, sb);
  Params<SLow> lp = cast_params<SLow>(p);
  SequenceBatch<SLow> lb = cast_batch<SLow>(sb);
  ForwardTrace<SLow> low = forward(cell, lp, lb);

  std::vector<DriftRow> rows;
  rows.reserve(static_cast<std::size_t>(sb.seq_len));
  std::vector<double> errs(static_cast<std::size_t>(sb.batch) * sb.dim);
  for (int t = 1; t <= sb.seq_len; ++t) {
    std::size_t k = 0;
    for (int b = 0; b < sb.batch; ++b)
      for (int e = 0; e < sb.dim; ++e, ++k)
        errs[k] = std::abs(num::to_double(low.states[low.s_index(t, 0, b, e)]) -
                           ref.states[ref.s_index(t, 0, b, e)]);
    std::sort(errs.begin(), errs.end());
    DriftRow row;
    row.t = t;
    row.p50 = nearest_rank(errs, 50.0);
    row.p90 = nearest_rank(errs, 90.0);
    row.p100 = errs.back();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

double forward_blockdiag_equivalence_check(const CellSpec& cell, const Params<double>& p,
                                           const SequenceBatch<double>& sb) {
  ForwardTrace<double> heads = forward(cell, p, sb);

  Params<double> full = Params<double>::zeros(1, p.dim(), p.num_gates);
  full.bias = p.bias;
  for (int hd = 0; hd < p.num_heads; ++hd)
    for (int j = 0; j < p.num_gates; ++j)
      for (int r = 0; r < p.head_dim; ++r)
        for (int c = 0; c < p.head_dim; ++c)
          full.recurrent[full.r_index(0, j, hd * p.head_dim + r, hd * p.head_dim + c)] =
              p.recurrent[p.r_index(hd, j, r, c)];

  ForwardTrace<double> assembled = forward(cell, full, sb);
  double dev = 0.0;
  for (std::size_t i = 0; i < heads.states.size(); ++i)
    dev = std::max(dev, std::abs(heads.states[i] - assembled.states[i]));
  return dev;
}

std::vector<DriftRow> precision_drift_report(const CellSpec& cell, const Params<double>& p,
                                             const SequenceBatch<double>& sb,
                                             const std::string& low_dtype) {
  if (low_dtype == "bf16" || low_dtype == "bfloat16") return drift_impl<BFloat16>(cell, p, sb);
  if (low_dtype == "fp32" || low_dtype == "float32") return drift_impl<float>(cell, p, sb);
  if (low_dtype == "fp64" || low_dtype == "float64") return drift_impl<double>(cell, p, sb);
  throw std::invalid_argument("unsupported drift dtype: " + low_dtype);
}

std::string drift_to_csv(const std::vector<DriftRow>& rows) {
  std::ostringstream os;
  os << "t,p50,p90,p100\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", r.t, r.p50, r.p90, r.p100);
    os << buf;
  }
  return os.str();
}

}  // namespace rnnkit::rnn
