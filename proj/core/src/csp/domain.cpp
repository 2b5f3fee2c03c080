#include "rnnkit/csp/domain.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <stdexcept>

namespace rnnkit::csp {

Int sat_add(Int a, Int b) {
  Int r;
  if (__builtin_add_overflow(a, b, &r) || r > kIntCap) return kIntCap;
  return r;
}

Int sat_mul(Int a, Int b) {
  Int r;
  if (__builtin_mul_overflow(a, b, &r) || r > kIntCap) return kIntCap;
  return r;
}

Domain Domain::empty() { return Domain{}; }

Domain Domain::singleton(Int v) {
  if (v < 1) throw std::invalid_argument("domain values must be >= 1");
  Domain d;
  d.base_ = v;
  d.step_ = 1;
  d.count_ = 1;
  return d;
}

Domain Domain::from_progression(Int base, Int step, Int count) {
  Domain d;
  if (count <= 0) return d;
  d.base_ = base;
  d.step_ = count == 1 ? 1 : step;
  d.count_ = count;
  return d;
}

Domain Domain::range(Int lo, Int hi) { return strided(lo, hi, 1); }

Domain Domain::strided(Int lo, Int hi, Int step) {
  if (step < 1) throw std::invalid_argument("stride must be >= 1");
  if (lo < 1) lo += ((1 - lo) + step - 1) / step * step;  // first grid value >= 1
  if (lo > hi) return Domain{};
  Int count = (hi - lo) / step + 1;
  return from_progression(lo, step, count);
}

Domain Domain::of(std::vector<Int> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (!values.empty() && values.front() < 1)
    throw std::invalid_argument("domain values must be >= 1");
  if (values.empty()) return Domain{};
  if (values.size() == 1) return singleton(values[0]);
  // Canonicalize perfect progressions so stride information is kept.
  Int step = values[1] - values[0];
  bool regular = true;
  for (std::size_t i = 2; i < values.size(); ++i) {
    if (values[i] - values[i - 1] != step) {
      regular = false;
      break;
    }
  }
  if (regular) return from_progression(values.front(), step, static_cast<Int>(values.size()));
  Domain d;
  d.count_ = static_cast<Int>(values.size());
  d.vec_ = std::move(values);
  return d;
}

Int Domain::min() const {
  assert(count_ > 0);
  return is_vec() ? vec_.front() : base_;
}

Int Domain::max() const {
  assert(count_ > 0);
  return is_vec() ? vec_.back() : base_ + step_ * (count_ - 1);
}

bool Domain::contains(Int v) const {
  if (count_ == 0) return false;
  if (is_vec()) return std::binary_search(vec_.begin(), vec_.end(), v);
  if (v < base_ || v > max()) return false;
  return (v - base_) % step_ == 0;
}

Int Domain::nth(Int n) const {
  assert(n >= 0 && n < count_);
  return is_vec() ? vec_[static_cast<std::size_t>(n)] : base_ + step_ * n;
}

Int Domain::stride() const { return is_vec() ? 1 : step_; }

namespace {

// Extended gcd: returns g and x with a*x ≡ g (mod m), using __int128 to
// avoid overflow on intermediate products.
Int mod_inverse(Int a, Int m) {
  Int old_r = a % m, r = m;
  Int old_s = 1, s = 0;
  while (r != 0) {
    Int q = old_r / r;
    Int tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  Int inv = old_s % m;
  if (inv < 0) inv += m;
  return inv;
}

}  // namespace

Domain Domain::intersect(const Domain& other) const {
  if (is_empty() || other.is_empty()) return Domain{};
  if (is_vec() || other.is_vec()) {
    const Domain& v = is_vec() ? *this : other;
    const Domain& o = is_vec() ? other : *this;
    std::vector<Int> out;
    for (Int x : v.vec_)
      if (o.contains(x)) out.push_back(x);
    return of(std::move(out));
  }
  // Both progressions: CRT merge of x ≡ r1 (mod s1), x ≡ r2 (mod s2).
  Int lo = std::max(min(), other.min());
  Int hi = std::min(max(), other.max());
  if (lo > hi) return Domain{};
  Int s1 = step_, s2 = other.step_;
  Int g = std::gcd(s1, s2);
  Int r1 = base_ % s1, r2 = other.base_ % s2;
  if ((r2 - r1) % g != 0) return Domain{};
  __int128 lcm = static_cast<__int128>(s1) / g * s2;
  Int m = s2 / g;
  __int128 x0;
  if (m == 1) {
    x0 = r1;
  } else {
    Int t = (((r2 - r1) / g % m + m) % m) * mod_inverse(s1 / g % m, m) % m;
    x0 = static_cast<__int128>(r1) + static_cast<__int128>(s1) * t;
  }
  // First value on the merged grid that is >= lo.
  __int128 delta = lo - x0;
  __int128 k = delta >= 0 ? (delta + lcm - 1) / lcm : -((-delta) / lcm);
  __int128 first = x0 + k * lcm;
  if (first > hi) return Domain{};
  Int count = lcm > hi - first ? 1 : static_cast<Int>((hi - first) / lcm + 1);
  Int step = lcm > kIntCap ? kIntCap : static_cast<Int>(lcm);
  return from_progression(static_cast<Int>(first), step, count);
}

Domain Domain::clamp(Int lo, Int hi) const {
  if (is_empty()) return Domain{};
  lo = std::max(lo, min());
  hi = std::min(hi, max());
  if (lo > hi) return Domain{};
  if (is_vec()) {
    auto b = std::lower_bound(vec_.begin(), vec_.end(), lo);
    auto e = std::upper_bound(vec_.begin(), vec_.end(), hi);
    return of(std::vector<Int>(b, e));
  }
  Int first = base_ + ((lo - base_ + step_ - 1) / step_) * step_;
  if (first > hi) return Domain{};
  Int count = (hi - first) / step_ + 1;
  return from_progression(first, step_, count);
}

Domain Domain::keep_multiples_of(Int m) const {
  if (m < 1) throw std::invalid_argument("divisor must be >= 1");
  if (m == 1 || is_empty()) return *this;
  if (is_vec()) {
    std::vector<Int> out;
    for (Int v : vec_)
      if (v % m == 0) out.push_back(v);
    return of(std::move(out));
  }
  return intersect(strided(m, max(), m));
}

Domain Domain::filter(const std::function<bool(Int)>& keep) const {
  std::vector<Int> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (Int i = 0; i < count_; ++i) {
    Int v = nth(i);
    if (keep(v)) out.push_back(v);
  }
  return of(std::move(out));
}

std::vector<Int> Domain::values() const {
  if (is_vec()) return vec_;
  std::vector<Int> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (Int i = 0; i < count_; ++i) out.push_back(nth(i));
  return out;
}

bool Domain::operator==(const Domain& other) const {
  if (count_ != other.count_) return false;
  if (count_ == 0) return true;
  for (Int i = 0; i < count_; ++i)
    if (nth(i) != other.nth(i)) return false;
  return true;
}

}  // namespace rnnkit::csp
