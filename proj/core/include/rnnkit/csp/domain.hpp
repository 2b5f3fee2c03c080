#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace rnnkit::csp {

using Int = std::int64_t;

// Saturation cap for bound arithmetic. Bounds at or above the cap are
// treated as "unbounded above"; they clamp instead of wrapping.
inline constexpr Int kIntCap = Int{1} << 62;

Int sat_add(Int a, Int b);
Int sat_mul(Int a, Int b);

/// Finite set of strictly positive integers.
///
/// Two storage forms are used: an arithmetic progression (base, step, count)
/// for wide regular sets such as [1..10^6] or "multiples of 16", and an
/// explicit sorted vector for irregular small sets. Divisibility and range
/// pruning on the progression form never enumerate values.
class Domain {
 public:
  Domain() = default;  // empty

  static Domain empty();
  static Domain singleton(Int v);
  static Domain range(Int lo, Int hi);                    // {lo, lo+1, .., hi}
  static Domain strided(Int lo, Int hi, Int step);        // {lo, lo+step, ..} <= hi
  static Domain of(std::vector<Int> values);              // sorted + deduped

  bool is_empty() const { return count_ == 0; }
  Int size() const { return count_; }
  Int min() const;
  Int max() const;
  bool contains(Int v) const;
  bool is_singleton() const { return count_ == 1; }

  /// True when values are materialized (or cheaply materializable) for
  /// per-value scans under the given limit.
  bool enumerable(Int limit) const { return count_ <= limit; }

  /// n-th smallest value, 0-based. O(1) for progressions, O(1) for vectors.
  Int nth(Int n) const;

  Int stride() const;  // progression step; 1 for vectors/singletons

  Domain intersect(const Domain& other) const;
  Domain clamp(Int lo, Int hi) const;
  /// Subset of values divisible by m (m >= 1).
  Domain keep_multiples_of(Int m) const;
  /// Subset passing the predicate. Requires enumerable(limit) callers.
  Domain filter(const std::function<bool(Int)>& keep) const;

  std::vector<Int> values() const;

  bool operator==(const Domain& other) const;

 private:
  // Progression: {base_ + i*step_ : 0 <= i < count_}. When vec_ is non-empty
  // it holds the explicit values and base_/step_ are ignored.
  Int base_ = 0;
  Int step_ = 1;
  Int count_ = 0;
  std::vector<Int> vec_;

  bool is_vec() const { return !vec_.empty(); }
  static Domain from_progression(Int base, Int step, Int count);
};

}  // namespace rnnkit::csp
