#pragma once

#include "fwdcurve/solver.hpp"

namespace fwdcurve {

/// One-dimensional equation satisfied by the forward value at a fixed
/// delivery T under the curve dynamics:
///     dF = a(t, F) dt + c(t, T) psi(t, F) dB,
/// where c(t, T) is the instantaneous volatility factor of the noise and B
/// a scalar Brownian motion.  This is the cross-validation target for the
/// full curve simulation.
struct ProjectionSpec {
  double T = 1.0;
  double F0 = 1.0;
  CoefficientSpecPtr coeffs;
  CovariancePtr q;
  /// With a diffusion vanishing at 0, the state 0 is absorbing; when set,
  /// an Euler step crossing 0 lands exactly on 0 and stays there.
  bool absorb_at_zero = true;
};

/// One Euler step; `z` is the standard normal consumed by the step.
/// Absorption: sde_step(0, ...) returns 0 when absorb_at_zero is set and
/// the diffusion vanishes at 0.
double sde_step(double F, double t, const ProjectionSpec& spec, double dt,
                double z);

enum class NoiseMode {
  independent,  // own Gaussian stream per path
  coupled       // projects the very draws the curve simulation consumes
};

struct ScalarPathEnsemble {
  /// paths[p][k] = F at time k * dt (index 0 is F0).
  std::vector<std::vector<double>> paths;
  double dt = 0.0;
  int absorbed_count = 0;
  int stopped_count = 0;  // domain errors before the horizon
};

/// Simulates the projection equation.  In coupled mode the scalar normal of
/// step k is the noise increment the curve simulation evaluates at the
/// delivery, rescaled to unit variance:
///     z_k = sum_j sqrt(lambda_j) Z_kj e_j(T - t_k) / c(t_k, T),
/// with Z_kj exactly the draws of path p, step k of the curve run under the
/// same master seed.
ScalarPathEnsemble simulate_F(const ProjectionSpec& spec, const SimConfig& sim,
                              NoiseMode mode);

/// Pathwise and distributional comparison between a curve ensemble
/// (projected at delivery T along each path) and the coupled scalar
/// equation.  Refuses (CouplingError) when the discretization cannot make
/// the comparison exact: T off-grid, dt not a node multiple, or the
/// ensemble was not run with a maturity track at T.
struct CompareReport {
  std::vector<double> per_path_sup_gap;
  double mean_sup_gap = 0.0;
  double max_sup_gap = 0.0;
  double terminal_mean_curve = 0.0;
  double terminal_mean_scalar = 0.0;
  double terminal_var_curve = 0.0;
  double terminal_var_scalar = 0.0;
  /// Paired standard error of the terminal difference, and the 3-SE verdict
  /// on mean agreement.
  double terminal_diff_se = 0.0;
  bool terminal_mean_compatible = false;
  int paths_compared = 0;
};

CompareReport compare_projection(const PathEnsemble& curve_paths,
                                 const ProjectionSpec& spec);

/// dt-refinement study of the projection identity.  For every dt the curve
/// equation is simulated with the maturity track and compared against a
/// reference driven by the same Gaussians:
///   - the coupled Euler scalar path ("gap", exact up to rounding, which
///     validates the coupling itself), and
///   - the closed-form solution of the scalar equation when one exists
///     (state-proportional diffusion with time-constant volatility), whose
///     distance measures the scheme's strong error and must shrink with dt.
struct ConvergenceRow {
  double dt = 0.0;
  double mean_sup_gap = 0.0;       // curve projection vs coupled Euler
  double mean_err_vs_exact = 0.0;  // curve projection vs closed form
  bool exact_available = false;
};

std::vector<ConvergenceRow> projection_convergence(
    const CurveGrid& g0, const ProjectionSpec& spec, const SimConfig& base_sim,
    const std::vector<double>& dts);

/// Least-squares slope of log2(err) against log2(dt); the fitted strong
/// order of a refinement table.
double fitted_order(const std::vector<double>& dts,
                    const std::vector<double>& errs);

}  // namespace fwdcurve
