#pragma once

// Hand-rolled generators for property tests. Each trial draws from its own
// seeded engine so a failure reports a reproducible seed.

#include "fblab/grid_field.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fblab::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }
  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }
  double angle() { return uniform(0.0, 2.0 * std::numbers::pi); }

  Point unit2() {
    const double a = angle();
    Point p(2);
    p << std::cos(a), std::sin(a);
    return p;
  }

  Point unit(int n) {
    Point p(n);
    do {
      for (int d = 0; d < n; ++d) p[d] = normal();
    } while (p.norm() < 1e-6);
    return p.normalized();
  }

  Vector vector(int m, double scale = 1.0) {
    Vector v(m);
    for (int j = 0; j < m; ++j) v[j] = scale * normal();
    return v;
  }

  /// Field with standard normal values times `scale`.
  Field noise(const Field& geometry, int m, double scale = 1.0) {
    Field out = geometry.like(m);
    for (Index i = 0; i < out.num_nodes(); ++i) out.set_value(i, vector(m, scale));
    return out;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Runs `body(gen)` for `trials` seeds derived from `base`.
template <typename Body>
void for_all(int trials, std::uint64_t base, Body&& body) {
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = base * 1000003ULL + static_cast<std::uint64_t>(t);
    Gen gen(seed);
    CAPTURE(seed);
    body(gen);
  }
}

}  // namespace fblab::testing
