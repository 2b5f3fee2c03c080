#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rnnkit/rnn/engine.hpp"

namespace rnnkit::rnn {

/// Named float64 tensor with an explicit shape.
struct NamedTensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;  // row-major, size = product(dims)
};

using TensorMap = std::map<std::string, NamedTensor>;

/// Container layout (all integers little-endian):
///   magic   "RTN1" (4 bytes)
///   u32     tensor count
///   per tensor:
///     u16   name length, then the name bytes
///     u8    dtype tag (0 = float64)
///     u8    rank
///     u64   dims[rank]
///     f64   payload, row-major
void save_tensors(const std::string& path, const TensorMap& tensors);
TensorMap load_tensors(const std::string& path);  // throws on malformed files

/// Parameter bundle as tensors "recurrent" [heads, gates, dh, dh] and
/// "bias" [gates, dim].
TensorMap params_to_tensors(const Params<double>& p);
Params<double> params_from_tensors(const TensorMap& t);

}  // namespace rnnkit::rnn
