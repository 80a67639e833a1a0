#pragma once

#include <functional>
#include <optional>

#include "fwdcurve/space.hpp"

namespace fwdcurve {

/// Admissible state domains of a scalar coefficient psi(t, y).
enum class Domain { all_reals, nonneg, pos };

enum class MapFamily { custom, cev, cev_tilde, separable, exp_form };

const char* domain_name(Domain d);
const char* family_name(MapFamily f);

/// A scalar map psi(t, y) applied node-by-node to curves ("lifting").  The
/// y-derivative is mandatory because every regularity estimator needs it;
/// the t-derivative and second y-derivative are optional capabilities that
/// positivity checking requires.
struct PointwiseMap {
  using Fn = std::function<double(double, double)>;  // (t, y)

  Fn psi;
  Fn dpsi_dy;
  Fn dpsi_dt;    // may be empty
  Fn d2psi_dy2;  // may be empty

  Domain domain = Domain::all_reals;
  MapFamily family = MapFamily::custom;

  /// Set for state exponents strictly between 1 and 2: the map is
  /// constructible but no local Lipschitz guarantee holds on the relevant
  /// cones, so simulations with it are flagged.
  bool lipschitz_unsafe = false;

  bool has_time_derivative() const { return static_cast<bool>(dpsi_dt); }
  bool has_second_derivative() const { return static_cast<bool>(d2psi_dy2); }
};

bool in_domain(Domain d, double y);

/// psi(t, y) honoring the domain.  For domain pos at y == 0 the one-sided
/// limit is used when it exists numerically; otherwise a DomainViolationError
/// is thrown.  `node_index` only labels the error message.
double eval_psi(const PointwiseMap& map, double t, double y,
                int node_index = -1);
double eval_dpsi_dy(const PointwiseMap& map, double t, double y,
                    int node_index = -1);

/// Lift: (Psi(t, f))(x) = psi(t, f(x)) node-wise, tail included.  Locality
/// and Lipschitz/growth transfer are exactly what make these coefficients
/// usable as drift and diffusion of the curve equation.
CurveGrid lift(const PointwiseMap& map, double t, const CurveGrid& f);

/// Sampling density for the estimators below.
struct LatticeOptions {
  int n_y = 512;            // linear y-points per range
  int n_log = 256;          // log-spaced points toward 0 per sign
  int n_t = 64;             // time points on [0, t_max]
  double deriv_cap = 1e12;  // lattice sup above this reports +infinity
  double inf_floor = -1e12;     // lattice inf below this reports "unbounded"
  double log_floor_rel = 1e-30;  // smallest log-spaced |y| relative to range
};

/// Lattice estimate of the Lipschitz constant of psi on the band
/// |y| <= n * k_delta that curves of norm <= n can reach:
/// sup |dpsi_dy(t, y)| over a (t, y) lattice, +infinity once the cap is
/// exceeded (blow-up near 0 is probed by log-spaced points).
double estimate_local_lipschitz(const PointwiseMap& map, double n,
                                double t_max, double k_delta,
                                const LatticeOptions& opts = {});

struct LinearGrowthReport {
  double g_hat = 0.0;       // stabilized sup |psi| / (1 + |y|)
  double deriv_sup = 0.0;   // stabilized sup |dpsi_dy|
  bool verdict = false;     // both stabilized under range doubling
};

/// Probes sup |psi(t,y)| / (1 + |y|) and sup |dpsi_dy| over ranges that
/// double until the sups stabilize (5% tolerance) or the doubling budget is
/// exhausted.
LinearGrowthReport estimate_linear_growth(const PointwiseMap& map,
                                          double t_max,
                                          const LatticeOptions& opts = {});

/// Lattice check of the sufficient conditions under which the curve
/// equation preserves strict positivity:  psi vanishes exactly on {y = 0},
/// and near 0 the ratios d_t psi / psi, d_y psi, and psi * d_yy psi are all
/// bounded below.
struct PositivityReport {
  bool zero_set_ok = false;   // psi(t,0) = 0 and psi(t,y) > 0 for y > 0
  bool time_ratio_ok = false;  // inf d_t psi / psi bounded below
  bool slope_ok = false;       // inf d_y psi bounded below
  bool curvature_ok = false;   // inf psi * d_yy psi bounded below
  double inf_time_ratio = 0.0;
  double inf_slope = 0.0;
  double inf_curvature = 0.0;
  bool all_pass() const {
    return zero_set_ok && time_ratio_ok && slope_ok && curvature_ok;
  }
};

/// Requires domain nonneg or pos and both optional derivatives; throws
/// CapabilityError otherwise.  The neighborhood probed is (0, eps).
PositivityReport check_positivity_conditions(const PointwiseMap& map,
                                             double eps, double t_max,
                                             const LatticeOptions& opts = {});

/// Structural Lipschitz constant for the lifted map on curves of norm <= n,
/// assembled from lattice sups of the first and second y-derivative:
///     L_n = sqrt(k_delta^2 L^2 + 2 L^2 + 2 k_delta^2 M^2 n^2),
/// where L = sup |dpsi_dy| and M = sup |d2psi_dy2| on the reachable band.
/// norm(lift(f1) - lift(f2)) <= L_n * norm(f1 - f2) for norm(f_i) <= n.
struct StructuralLipschitzBound {
  double deriv_sup = 0.0;    // L
  double curv_sup = 0.0;     // M
  double lifted_bound = 0.0; // L_n
};

StructuralLipschitzBound structural_lipschitz_bound(
    const PointwiseMap& map, double n, double t_max, double k_delta,
    const LatticeOptions& opts = {});

/// Max relative mismatch between dpsi_dy and a central finite difference of
/// psi over a (t, y) lattice; analytic families should stay below 1e-4.
double derivative_consistency_error(const PointwiseMap& map, double t_max,
                                    double y_lo, double y_hi,
                                    const LatticeOptions& opts = {});

// --- families ---------------------------------------------------------

/// Constant-elasticity diffusion psi(t, y) = beta(t) * y^gamma on y >= 0.
///
/// gamma < 1 is rejected outright: the lifted map cannot be locally
/// Lipschitz near 0 in any band.  Exponents strictly between 1 and 2 are
/// constructible but flagged lipschitz_unsafe.  `beta` must be bounded and
/// positive; pass `beta_prime` to enable the time-derivative capability.
PointwiseMap make_cev(double gamma, std::function<double(double)> beta,
                      std::function<double(double)> beta_prime = {});
PointwiseMap make_cev(double gamma, double beta_const);

/// Regularized power map y -> y^{gamma_tilde(y)} with exponent 1 on
/// [0, eps], gamma from 2*eps on, and a C^1 cubic bridge in between.  For
/// gamma in (1, 2) this restores a finite Lipschitz estimate while keeping
/// the tail behavior of the plain power map.
PointwiseMap make_cev_tilde(double gamma, double eps);

/// Multiplicative form psi(t, y) = y * psi_tilde(t, y) used by the
/// exponential (positive-curve) parametrization.  psi_tilde must live on a
/// nonnegative or positive domain.
PointwiseMap make_exp_form(const PointwiseMap& psi_tilde);

/// Separable psi(t, y) = beta(t) * phi(y).
PointwiseMap make_separable(std::function<double(double)> beta,
                            std::function<double(double)> phi,
                            std::function<double(double)> dphi,
                            std::function<double(double)> d2phi = {},
                            std::function<double(double)> beta_prime = {},
                            Domain domain = Domain::all_reals);

/// psi identically zero (the trivial drift / diffusion).
PointwiseMap make_zero_map();

/// psi(t, y) = value, independent of state and time.
PointwiseMap make_const_map(double value);

/// psi(t, y) = y.
PointwiseMap make_identity_map();

/// Drift helpers.
PointwiseMap make_const_drift(double a0);
PointwiseMap make_mean_revert_drift(double kappa, double theta);
PointwiseMap make_proportional_drift(double mu);

/// Drift / diffusion pair for the curve equation.  The diffusion domain
/// must be contained in the drift domain so every reachable state is legal
/// for both.
struct CoefficientSpec {
  PointwiseMap drift;
  PointwiseMap diffusion;
};

CoefficientSpec make_coefficients(PointwiseMap drift, PointwiseMap diffusion);

}  // namespace fwdcurve
