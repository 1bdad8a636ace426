#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <algorithm>
#include <utility>

namespace leafrust {

/// SplitMix64 generator (Steele, Lea & Flood 2014): 64-bit state, one add and
/// three xor-shift-multiply rounds per draw. All randomness in the project is
/// derived from this generator so that results do not depend on the standard
/// library's distribution implementations.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] (inclusive), from the top 53 bits. Bias is
  // negligible for the small ranges used here.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<double>(hi - lo) + 1.0;
    const auto k = static_cast<std::int64_t>(uniform() * span);
    return std::min(lo + k, hi);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Bell-shaped noise with unit variance: sum of 12 uniforms minus 6
  // (Irwin-Hall), bounded to [-6, 6].
  double approx_normal() noexcept {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from a base seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept {
  SplitMix64 mix(base ^ (tag * 0xD1B54A32D192ED03ULL));
  mix();
  return mix();
}

// Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace leafrust
