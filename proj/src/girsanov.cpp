#include "fwdcurve/girsanov.hpp"

#include <cmath>

#include "fwdcurve/operators.hpp"

namespace fwdcurve {

CurveGrid phi_curve(double t, const CurveGrid& g,
                    const CoefficientSpec& coeffs) {
  const MultiplicativeKernel sigma = make_kernel(lift(coeffs.diffusion, t, g));
  const MultiplicativeKernel inv = invert_kernel(sigma);
  return mult_apply(inv, lift(coeffs.drift, t, g));
}

NovikovReport novikov_estimate(const CurveGrid& g0,
                               const CoefficientSpecPtr& coeffs,
                               const CovariancePtr& q, const SimConfig& sim,
                               double t_bar) {
  if (!coeffs) throw DomainError("novikov_estimate: null coefficients");
  if (!(t_bar > 0.0) || t_bar > sim.horizon + 1e-12)
    throw DomainError("novikov_estimate: need 0 < t_bar <= horizon");
  validate_sim_config(sim);

  // Driftless dynamics: the drift enters only through phi.
  auto driftless = std::make_shared<CoefficientSpec>(
      make_coefficients(make_zero_map(), coeffs->diffusion));

  NovikovReport rep;
  rep.per_path_integrals.reserve(static_cast<std::size_t>(sim.n_paths));
  double sum = 0.0;
  int counted = 0;
  for (int p = 0; p < sim.n_paths; ++p) {
    double integral = 0.0;
    bool failed = false;
    auto observer = [&](int /*step*/, double t, const CurveGrid& g,
                        const CurveGrid& /*dW*/) {
      if (failed || t >= t_bar - 1e-12) return;
      try {
        const CurveGrid phi = phi_curve(t, g, *coeffs);
        integral += inner_product(phi, phi) * sim.dt;
      } catch (const InvertibilityError&) {
        failed = true;
      }
    };
    const PathResult path = simulate_path(
        g0, driftless, q, sim, static_cast<std::uint64_t>(p), observer);
    if (failed || path.stopped_at) {
      ++rep.failed_paths;
      continue;
    }
    rep.per_path_integrals.push_back(integral);
    const double expo = 0.5 * integral;
    if (expo > kOverflowExponent) {
      rep.overflow = true;
      continue;
    }
    sum += std::exp(expo);
    ++counted;
  }
  if (!rep.overflow && counted > 0) rep.mc_estimate = sum / double(counted);
  return rep;
}

double rn_log_weight(const PathResult& path, const CoefficientSpec& coeffs,
                     const CovarianceOperator& q) {
  double weight = 0.0;
  replay_path(path, q,
              [&](int /*step*/, double t, const CurveGrid& g,
                  const CurveGrid& dW) {
                const CurveGrid phi = phi_curve(t, g, coeffs);
                weight += inner_product(phi, dW) -
                          0.5 * inner_product(phi, phi) * path.dt;
              });
  return weight;
}

void attach_rn_weights(PathEnsemble& ensemble, const CoefficientSpec& coeffs,
                       const CovarianceOperator& q) {
  for (PathResult& p : ensemble.paths)
    p.rn_log_weight = rn_log_weight(p, coeffs, q);
}

}  // namespace fwdcurve
