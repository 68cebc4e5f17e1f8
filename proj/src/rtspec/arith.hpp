#pragma once

// Arithmetic shared by the evaluator and the constant folder, so folding
// can never disagree with execution.

#include <cstdint>
#include <limits>

namespace rtspec::arith {

inline std::int64_t add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

inline std::int64_t sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}

inline std::int64_t mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

// Callers check b != 0. INT64_MIN / -1 wraps to INT64_MIN.
inline std::int64_t div(std::int64_t a, std::int64_t b) {
  if (b == -1) return sub(0, a);
  return a / b;
}

inline std::int64_t mod(std::int64_t a, std::int64_t b) {
  if (b == -1) return 0;
  return a % b;
}

/// Number of iterations of `for v = lo; v < hi; v += step` (step > 0).
inline std::int64_t trip_count(std::int64_t lo, std::int64_t hi, std::int64_t step) {
  if (lo >= hi) return 0;
  __int128 span = static_cast<__int128>(hi) - lo;
  return static_cast<std::int64_t>((span - 1) / step + 1);
}

}  // namespace rtspec::arith
