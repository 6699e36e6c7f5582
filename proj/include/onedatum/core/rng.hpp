// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace onedatum::rng {

// SplitMix64 finalizer. Used to spread seed material before feeding PCG.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seed for record `index` of a dataset generated under `global_seed`.
/// Pure function of its arguments, so records can be produced in any
/// order or partitioned across workers without changing the output.
inline std::uint64_t derive(std::uint64_t global_seed, std::uint64_t index) {
  return mix64(global_seed ^ mix64(index + 0x632be59bd9b4e019ull));
}

/// PCG32 (Melissa O'Neill, pcg-random.org). Hand-rolled, including the
/// distributions below, because <random> engines are portable but the
/// standard distributions are not bit-identical across C++ runtimes.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed) {
    state_ = 0u;
    inc_ = (mix64(seed + 1) << 1u) | 1u;
    next();
    state_ += mix64(seed);
    next();
  }

  std::uint32_t next() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  std::uint64_t next64() {
    return (static_cast<std::uint64_t>(next()) << 32) | next();
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

/// A deterministic random stream with the sampling primitives the
/// generation pipelines need.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_.next()) * 0x1p-32;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound). Lemire's unbiased rejection method.
  std::uint32_t uniform_int(std::uint32_t bound) {
    std::uint64_t m = static_cast<std::uint64_t>(gen_.next()) * bound;
    auto lo = static_cast<std::uint32_t>(m);
    if (lo < bound) {
      std::uint32_t t = (-bound) % bound;
      while (lo < t) {
        m = static_cast<std::uint64_t>(gen_.next()) * bound;
        lo = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller. The spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang; boosted for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = 0.0;
      do {
        u = uniform();
      } while (u <= 0.0);
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return d * v;
      }
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  /// Fisher-Yates shuffle.
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint32_t>(last - first);
    for (std::uint32_t i = n; i > 1; --i) {
      std::uint32_t j = uniform_int(i);
      std::swap(first[i - 1], first[j]);
    }
  }

  Pcg32& raw() { return gen_; }

 private:
  Pcg32 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace onedatum::rng
