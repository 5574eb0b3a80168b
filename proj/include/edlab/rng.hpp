#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace edlab {

namespace detail {
inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;
}

// Finalizing 64-bit mixer (the splitmix64 output function).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream-split rule used everywhere: the shard/trial index is XORed into the
// seed and passed through the mixer, so any shard layout sees the same
// per-trial stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ index);
}

// Deterministic splitmix64 stream. Cheap enough to construct one per trial.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += detail::kGoldenGamma;
    return mix64(state_);
  }

  // Uniform on (0, 1]; never returns 0, so log() and inverse-CDF walks are safe.
  double u01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Draw order is fixed: radius first, angle second.
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(u01()));
    return r * std::cos(2.0 * std::numbers::pi * u01());
  }

 private:
  std::uint64_t state_;
};

}  // namespace edlab
