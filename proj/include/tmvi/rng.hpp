#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tmvi {

// Deterministic random source. Normal draws use Box-Muller on explicit
// 53-bit uniforms so the stream depends only on the mt19937_64 engine state,
// not on library-specific distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1); never returns an endpoint.
  double uniform() {
    return (double(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(angle);
    has_cached_ = true;
    return r * std::cos(angle);
  }

  // Well-mixed seed for an independent stream keyed by (seed, index); two
  // distinct indices never share engine state even for adjacent seeds.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(mix64(seed) ^ (index + 0x9E3779B97F4A7C15ull));
  }

  // Independent stream derived from (seed, index), e.g. one per grid point.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(derive_seed(seed, index));
  }

 private:
  static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace tmvi
