#pragma once

// Counter-based SplitMix64 generator.
//
//   draw(key, i) = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
//   split(key, stream) = mix64(key ^ mix64(stream + 0xD1B54A32D192ED03))
//
// mix64 is the SplitMix64 finalizer. Uniform doubles take the top 53 bits;
// normals use Box-Muller on consecutive uniform pairs. Because every draw is a
// pure function of (key, counter), any implementation reproduces the streams.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace stalelab {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix64(seed)) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Independent child stream; does not advance this generator.
  CounterRng split(std::uint64_t stream) const {
    CounterRng child(0);
    child.key_ = mix64(key_ ^ mix64(stream + 0xD1B54A32D192ED03ULL));
    return child;
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stalelab
