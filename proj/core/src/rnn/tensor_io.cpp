#include "rnnkit/rnn/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rnnkit::rnn {

namespace {

constexpr char kMagic[4] = {'R', 'T', 'N', '1'};

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::invalid_argument("truncated tensor file");
  return v;
}

}  // namespace

void save_tensors(const std::string& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    std::uint64_t n = 1;
    for (auto d : t.dims) n *= d;
    if (n != t.data.size())
      throw std::invalid_argument("tensor " + name + ": dims do not match payload");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(out, 0);  // float64
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw std::invalid_argument("write failed: " + path);
}

TensorMap load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::invalid_argument("not a tensor file: " + path);
  auto count = take<std::uint32_t>(in);
  TensorMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = take<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    auto dtype = take<std::uint8_t>(in);
    if (dtype != 0) throw std::invalid_argument("unsupported dtype tag in " + path);
    auto rank = take<std::uint8_t>(in);
    NamedTensor t;
    std::uint64_t n = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      t.dims.push_back(take<std::uint64_t>(in));
      n *= t.dims.back();
    }
    t.data.resize(n);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::invalid_argument("truncated tensor payload in " + path);
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

TensorMap params_to_tensors(const Params<double>& p) {
  TensorMap t;
  t["recurrent"] = NamedTensor{{static_cast<std::uint64_t>(p.num_heads),
                                static_cast<std::uint64_t>(p.num_gates),
                                static_cast<std::uint64_t>(p.head_dim),
                                static_cast<std::uint64_t>(p.head_dim)},
                               p.recurrent};
  t["bias"] = NamedTensor{{static_cast<std::uint64_t>(p.num_gates),
                           static_cast<std::uint64_t>(p.dim())},
                          p.bias};
  return t;
}

Params<double> params_from_tensors(const TensorMap& t) {
  const auto& r = t.at("recurrent");
  const auto& b = t.at("bias");
  if (r.dims.size() != 4 || b.dims.size() != 2)
    throw std::invalid_argument("unexpected parameter tensor ranks");
  Params<double> p;
  p.num_heads = static_cast<int>(r.dims[0]);
  p.num_gates = static_cast<int>(r.dims[1]);
  p.head_dim = static_cast<int>(r.dims[2]);
  if (r.dims[3] != r.dims[2]) throw std::invalid_argument("recurrent blocks must be square");
  if (b.dims[0] != r.dims[1] ||
      b.dims[1] != r.dims[0] * r.dims[2])
    throw std::invalid_argument("bias dims do not match recurrent dims");
  p.recurrent = r.data;
  p.bias = b.data;
  return p;
}

}  // namespace rnnkit::rnn
