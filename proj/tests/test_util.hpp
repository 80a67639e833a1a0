// Shared helpers for the unit tests: deterministic families of smooth and
// rough-but-bounded curves, and small numeric conveniences.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fwdcurve/space.hpp"

namespace testutil {

using fwdcurve::CurveGrid;
using fwdcurve::SpaceConfig;
using fwdcurve::SpaceConfigPtr;

// A deterministic pseudo-random smooth curve: a short cosine/exponential
// series with coefficients drawn from `rng`.  Smooth enough that finite
// differences resolve the derivative well at a few hundred nodes.
inline CurveGrid random_smooth_curve(const SpaceConfigPtr& cfg,
                                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double a0 = 2.0 * unif(rng);
  const double a1 = unif(rng);
  const double b1 = 0.5 + 0.5 * std::abs(unif(rng));   // decay rate
  const double a2 = 0.5 * unif(rng);
  const double w2 = 0.5 + std::abs(unif(rng));         // frequency
  const double a3 = 0.25 * unif(rng);
  auto f = [=](double x) {
    return a0 + a1 * std::exp(-b1 * x) + a2 * std::exp(-x) * std::cos(w2 * x) +
           a3 * std::exp(-2.0 * x);
  };
  return fwdcurve::make_curve_from(cfg, f, /*tail=*/a0);
}

// A strictly positive random smooth curve (for cone / logarithm tests).
inline CurveGrid random_positive_curve(const SpaceConfigPtr& cfg,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double base = 0.5 + unif(rng);
  const double amp = 0.5 * unif(rng);
  const double rate = 0.5 + unif(rng);
  auto f = [=](double x) { return base + amp * std::exp(-rate * x); };
  return fwdcurve::make_curve_from(cfg, f, /*tail=*/base);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace testutil
