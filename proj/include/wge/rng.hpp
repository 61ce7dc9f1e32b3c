#pragma once

#include <cmath>
#include <cstdint>

namespace wge {

// Seedable 64-bit-state generator (splitmix64). All samplers and Monte Carlo
// routines take explicit seeds and derive per-replicate streams through
// mix_seed, so results are reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n). Lemire multiply-shift; bias < 2^-64.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller with a cached spare. Avoids
  // std::normal_distribution, whose draw sequence is implementation-defined.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream-splitting rule: replicate i of a run seeded with `seed` uses
// mix_seed(seed, i). The splitmix64 finalizer decorrelates nearby inputs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Folds the bit pattern of a double into a seed. Lets a stream be keyed by a
// parameter value itself rather than its position.
inline std::uint64_t mix_bits(std::uint64_t seed, double x) {
  std::uint64_t bits;
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  __builtin_memcpy(&bits, &x, sizeof bits);
  return mix_seed(seed, bits);
}

}  // namespace wge
