#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mound/errors.hpp"

namespace mound {

// splitmix64 finalizer; used for seed mixing so per-patch / per-block
// substreams are decorrelated even for adjacent keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return mix64(mix64(seed) ^ key);
}

inline std::uint64_t patch_stream_key(int row, int col) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
         static_cast<std::uint32_t>(col);
}

// Deterministic RNG. mt19937_64's output sequence is fixed by the standard,
// but the std:: distributions are not, so every variate transform below is
// hand-rolled to keep streams bit-identical across platforms and compilers.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling: no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw ValidationError("uniform_index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; uses two uniforms per call and discards the spare so the
  // stream position never depends on call history.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925287 * u2);
  }

  // Knuth's product method, chunked so exp(-lambda) never underflows.
  // Chunking is exact: Poisson(a + b) = Poisson(a) + Poisson(b).
  long long poisson(double lambda) {
    if (lambda < 0.0) throw ValidationError("poisson: lambda must be >= 0");
    long long total = 0;
    while (lambda > 0.0) {
      const double chunk = lambda > 500.0 ? 500.0 : lambda;
      lambda -= chunk;
      const double limit = std::exp(-chunk);
      long long k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      total += k;
    }
    return total;
  }

private:
  std::mt19937_64 engine_;
};

} // namespace mound
