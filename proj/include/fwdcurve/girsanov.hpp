#pragma once

#include "fwdcurve/solver.hpp"

namespace fwdcurve {

/// Drift-to-volatility ratio phi(t) = diffusion(t, g)^{-1} drift(t, g),
/// the curve that removes the drift under a change of measure.  Node-wise
/// this is a(t, g(x)) / psi(t, g(x)); it requires the lifted diffusion to
/// be multiplicatively invertible (sign-definite including the tail) and
/// throws InvertibilityError naming the offending node otherwise.
CurveGrid phi_curve(double t, const CurveGrid& g, const CoefficientSpec& coeffs);

/// Monte Carlo probe of the exponential-moment condition
///     E[ exp( 1/2 int_0^t_bar norm(phi(t))^2 dt ) ] < infinity
/// along driftless paths (the diffusion of `coeffs` drives the dynamics,
/// its drift only enters phi).  Per-path integrals use left-endpoint
/// quadrature over the steps.  Exponents above kOverflowExponent raise the
/// overflow flag instead of returning a meaningless average.
struct NovikovReport {
  bool overflow = false;
  double mc_estimate = 0.0;  // valid when !overflow
  std::vector<double> per_path_integrals;
  int failed_paths = 0;  // paths where phi was not computable
};

inline constexpr double kOverflowExponent = 700.0;

NovikovReport novikov_estimate(const CurveGrid& g0,
                               const CoefficientSpecPtr& coeffs,
                               const CovariancePtr& q, const SimConfig& sim,
                               double t_bar);

/// Log of the discrete change-of-measure density along a finished path:
///     sum_k <phi(t_k), dW_k>  -  1/2 sum_k norm(phi(t_k))^2 dt,
/// with phi evaluated at the left endpoint of each step (the states the
/// path actually visited) and dW_k the very increments it consumed,
/// regenerated from the path's replay metadata.  The `coeffs` argument
/// supplies the drift/diffusion pair defining phi, which need not be the
/// pair that generated the path (negate the drift to undo one).
double rn_log_weight(const PathResult& path, const CoefficientSpec& coeffs,
                     const CovarianceOperator& q);

/// Fills PathResult::rn_log_weight across an ensemble.
void attach_rn_weights(PathEnsemble& ensemble, const CoefficientSpec& coeffs,
                       const CovarianceOperator& q);

}  // namespace fwdcurve
