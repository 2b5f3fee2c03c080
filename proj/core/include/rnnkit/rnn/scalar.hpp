#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace rnnkit::rnn {

/// bfloat16 emulation: values live in a float32 whose mantissa is rounded to
/// the top 7 bits (round-to-nearest-even) after every arithmetic store. Good
/// enough to reproduce drift behaviour without native hardware support.
struct BFloat16 {
  float v = 0.0f;

  BFloat16() = default;
  explicit BFloat16(double x) : v(round(static_cast<float>(x))) {}
  explicit BFloat16(float x) : v(round(x)) {}
  explicit BFloat16(int x) : v(round(static_cast<float>(x))) {}

  static float round(float x) {
    if (!std::isfinite(x)) return x;
    std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
    std::uint32_t lsb = (bits >> 16) & 1u;
    bits += 0x7FFFu + lsb;
    bits &= 0xFFFF0000u;
    return std::bit_cast<float>(bits);
  }

  explicit operator double() const { return v; }
  explicit operator float() const { return v; }

  friend BFloat16 operator+(BFloat16 a, BFloat16 b) { return BFloat16(a.v + b.v); }
  friend BFloat16 operator-(BFloat16 a, BFloat16 b) { return BFloat16(a.v - b.v); }
  friend BFloat16 operator*(BFloat16 a, BFloat16 b) { return BFloat16(a.v * b.v); }
  friend BFloat16 operator/(BFloat16 a, BFloat16 b) { return BFloat16(a.v / b.v); }
  friend BFloat16 operator-(BFloat16 a) { return BFloat16(-a.v); }
  BFloat16& operator+=(BFloat16 o) { return *this = *this + o; }
  BFloat16& operator-=(BFloat16 o) { return *this = *this - o; }
  BFloat16& operator*=(BFloat16 o) { return *this = *this * o; }
  friend bool operator<(BFloat16 a, BFloat16 b) { return a.v < b.v; }
  friend bool operator>(BFloat16 a, BFloat16 b) { return a.v > b.v; }
  friend bool operator==(BFloat16 a, BFloat16 b) { return a.v == b.v; }
};

/// Scalar shims so the engine template works for double, float and BFloat16.
/// Transcendentals evaluate in the working precision (float32 for bf16, then
/// rounded on store).
namespace num {

inline double tanh_(double x) { return std::tanh(x); }
inline float tanh_(float x) { return std::tanh(x); }
inline BFloat16 tanh_(BFloat16 x) { return BFloat16(std::tanh(x.v)); }

inline double exp_(double x) { return std::exp(x); }
inline float exp_(float x) { return std::exp(x); }
inline BFloat16 exp_(BFloat16 x) { return BFloat16(std::exp(x.v)); }

template <class S>
S sigmoid(S x) {
  // 1 / (1 + exp(-x)), computed through the type's own arithmetic.
  return S(1) / (S(1) + exp_(-x));
}

// log(sigmoid(x)) = -softplus(-x), stable for large |x|.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}
inline float log_sigmoid(float x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}
inline BFloat16 log_sigmoid(BFloat16 x) { return BFloat16(log_sigmoid(x.v)); }

template <class S>
S max_(S a, S b) {
  return a > b ? a : b;
}

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(float x) { return std::isfinite(x); }
inline bool finite(BFloat16 x) { return std::isfinite(x.v); }

inline double to_double(double x) { return x; }
inline double to_double(float x) { return x; }
inline double to_double(BFloat16 x) { return x.v; }

template <class S>
S from_double(double x) {
  return S(x);
}

}  // namespace num

}  // namespace rnnkit::rnn
