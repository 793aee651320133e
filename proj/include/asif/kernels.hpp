#pragma once

// Inner-loop primitives shared by the serial reference and the parallel
// kernels. Both paths must produce identical floats, so every similarity is
// accumulated in single precision, sequentially in dimension order.

#include <cstddef>
#include <cstdint>

namespace asif::kernels {

inline float dot(const float* a, const float* b, std::size_t d) noexcept {
  float s = 0.0f;
  for (std::size_t j = 0; j < d; ++j) s += a[j] * b[j];
  return s;
}

/// One scored row. `key` breaks value ties (smaller key wins); `index` is
/// the row position reported back to callers.
struct Scored {
  float value;
  std::uint64_t key;
  std::size_t index;
};

/// Strict total order used by every top-k path: value descending, then key
/// ascending.
inline bool ranks_before(const Scored& a, const Scored& b) noexcept {
  return a.value > b.value || (a.value == b.value && a.key < b.key);
}

}  // namespace asif::kernels
