#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cola {

/// Seeded MT19937 with fixed, documented conversions to uniform, normal and
/// index draws. std::*_distribution output is implementation-defined, so the
/// conversions are spelled out here to keep streams identical across standard
/// libraries and the reference scripts under tests/oracle/.
class Rng {
 public:
  explicit Rng(std::uint32_t seed) : engine_(seed) {}

  std::uint32_t next_u32() { return static_cast<std::uint32_t>(engine_()); }

  /// 53-bit uniform on [0, 1) from two 32-bit draws.
  double uniform01() {
    const std::uint32_t a = next_u32() >> 5;
    const std::uint32_t b = next_u32() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) / 9007199254740992.0;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Box-Muller, cosine branch only; consumes four 32-bit draws.
  double normal();

  /// Uniform integer on [0, n) by multiply-shift.
  std::uint32_t index(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(next_u32()) * n) >> 32);
  }

  /// Fisher-Yates, walking from the back.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = index(static_cast<std::uint32_t>(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937 engine_;
};

}  // namespace cola
