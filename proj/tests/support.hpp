#pragma once

#include <cmath>
#include <random>

#include "hk/coherent.hpp"

namespace hktest {

inline hk::PhasePoint pp(double q, double p) {
  hk::PhasePoint z;
  z.q = hk::RealVector::Constant(1, q);
  z.p = hk::RealVector::Constant(1, p);
  return z;
}

inline hk::GridSpec line(double center, double half_width, int n) {
  return hk::GridSpec::centered(hk::RealVector::Constant(1, center),
                                hk::RealVector::Constant(1, half_width), {n});
}

inline hk::SiegelMatrix iI(double s = 1.0, int d = 1) { return hk::SiegelMatrix::scaled_identity(d, s); }

/// Small deterministic generator for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  hk::PhasePoint point(double r) { return pp(uniform(-r, r), uniform(-r, r)); }
};

}  // namespace hktest
