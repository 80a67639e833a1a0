#include "fwdcurve/pointwise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace fwdcurve {

const char* domain_name(Domain d) {
  switch (d) {
    case Domain::all_reals: return "all_reals";
    case Domain::nonneg: return "nonneg";
    case Domain::pos: return "pos";
  }
  return "all_reals";
}

const char* family_name(MapFamily f) {
  switch (f) {
    case MapFamily::custom: return "custom";
    case MapFamily::cev: return "cev";
    case MapFamily::cev_tilde: return "cev_tilde";
    case MapFamily::separable: return "separable";
    case MapFamily::exp_form: return "exp_form";
  }
  return "custom";
}

bool in_domain(Domain d, double y) {
  switch (d) {
    case Domain::all_reals: return true;
    case Domain::nonneg: return y >= 0.0;
    case Domain::pos: return y > 0.0;
  }
  return false;
}

namespace {

[[noreturn]] void throw_domain_violation(const char* what, Domain d, double y,
                                         int node_index) {
  std::ostringstream msg;
  msg << what << ": state " << y << " outside domain " << domain_name(d);
  if (node_index >= 0) msg << " at node " << node_index;
  throw DomainViolationError(msg.str(), node_index, y);
}

// One-sided limit convention at y = 0 for positive-domain maps: accept when
// two probes close to 0 agree, otherwise report the violation.
double limit_at_zero(const std::function<double(double, double)>& fn,
                     double t, const char* what, Domain d, int node_index) {
  const double v1 = fn(t, 1e-10);
  const double v2 = fn(t, 1e-12);
  if (std::isfinite(v1) && std::isfinite(v2) &&
      std::abs(v1 - v2) <= 1e-6 * (1.0 + std::abs(v2)))
    return v2;
  throw_domain_violation(what, d, 0.0, node_index);
}

}  // namespace

double eval_psi(const PointwiseMap& map, double t, double y, int node_index) {
  if (in_domain(map.domain, y)) return map.psi(t, y);
  if (map.domain == Domain::pos && y == 0.0)
    return limit_at_zero(map.psi, t, "psi", map.domain, node_index);
  throw_domain_violation("psi", map.domain, y, node_index);
}

double eval_dpsi_dy(const PointwiseMap& map, double t, double y,
                    int node_index) {
  if (in_domain(map.domain, y)) return map.dpsi_dy(t, y);
  if (map.domain == Domain::pos && y == 0.0)
    return limit_at_zero(map.dpsi_dy, t, "dpsi_dy", map.domain, node_index);
  throw_domain_violation("dpsi_dy", map.domain, y, node_index);
}

CurveGrid lift(const PointwiseMap& map, double t, const CurveGrid& f) {
  if (!(t >= 0.0)) throw DomainError("lift: t must be >= 0");
  const int n = f.config->n_nodes();
  CurveGrid out = f;
  for (int i = 0; i < n; ++i) out.values[i] = eval_psi(map, t, f.values[i], i);
  out.tail = eval_psi(map, t, f.tail, n);
  return out;
}

// --- estimator lattices -----------------------------------------------

namespace {

std::vector<double> time_lattice(double t_max, int n_t) {
  if (!(t_max >= 0.0)) throw DomainError("estimator: t_max must be >= 0");
  if (t_max == 0.0) return {0.0};
  std::vector<double> ts(static_cast<std::size_t>(n_t));
  for (int i = 0; i < n_t; ++i) ts[i] = t_max * double(i) / double(n_t - 1);
  return ts;
}

// Linear coverage of the band plus log-spaced points accumulating at 0,
// where power-law derivatives blow up.
std::vector<double> state_lattice(Domain domain, double y_hi,
                                  const LatticeOptions& o) {
  std::vector<double> ys;
  ys.reserve(static_cast<std::size_t>(o.n_y + 2 * o.n_log + 2));
  const double lo = domain == Domain::all_reals ? -y_hi : 0.0;
  for (int i = 0; i < o.n_y; ++i) {
    const double y = lo + (y_hi - lo) * double(i) / double(o.n_y - 1);
    if (in_domain(domain, y)) ys.push_back(y);
  }
  if (domain == Domain::nonneg) ys.push_back(0.0);
  const double log_floor = std::log(o.log_floor_rel);
  for (int i = 1; i <= o.n_log; ++i) {
    const double y = y_hi * std::exp(log_floor * double(i) / double(o.n_log));
    ys.push_back(y);
    if (domain == Domain::all_reals) ys.push_back(-y);
  }
  return ys;
}

double lattice_sup_abs(const PointwiseMap::Fn& fn,
                       const std::vector<double>& ts,
                       const std::vector<double>& ys, double cap) {
  double sup = 0.0;
  for (double t : ts) {
    for (double y : ys) {
      const double v = std::abs(fn(t, y));
      if (!std::isfinite(v) || v > cap)
        return std::numeric_limits<double>::infinity();
      sup = std::max(sup, v);
    }
  }
  return sup;
}

}  // namespace

double estimate_local_lipschitz(const PointwiseMap& map, double n,
                                double t_max, double k_delta,
                                const LatticeOptions& opts) {
  if (!(n > 0.0)) throw DomainError("estimate_local_lipschitz: n must be > 0");
  const auto ts = time_lattice(t_max, opts.n_t);
  const auto ys = state_lattice(map.domain, n * k_delta, opts);
  return lattice_sup_abs(map.dpsi_dy, ts, ys, opts.deriv_cap);
}

LinearGrowthReport estimate_linear_growth(const PointwiseMap& map,
                                          double t_max,
                                          const LatticeOptions& opts) {
  const auto ts = time_lattice(t_max, opts.n_t);
  constexpr int kDoublings = 14;
  LinearGrowthReport rep;
  double prev_g = -1.0, prev_d = -1.0;
  double g = 0.0, d = 0.0;
  bool stable = false;
  for (int k = 0; k <= kDoublings; ++k) {
    const double y_hi = std::ldexp(1.0, k);  // 1, 2, 4, ...
    const auto ys = state_lattice(map.domain, y_hi, opts);
    g = 0.0;
    d = 0.0;
    for (double t : ts) {
      for (double y : ys) {
        const double p = std::abs(map.psi(t, y)) / (1.0 + std::abs(y));
        const double q = std::abs(map.dpsi_dy(t, y));
        if (!std::isfinite(p) || !std::isfinite(q) || p > opts.deriv_cap ||
            q > opts.deriv_cap) {
          rep.g_hat = std::numeric_limits<double>::infinity();
          rep.deriv_sup = std::numeric_limits<double>::infinity();
          rep.verdict = false;
          return rep;
        }
        g = std::max(g, p);
        d = std::max(d, q);
      }
    }
    if (k > 0 && g <= prev_g * 1.05 && d <= prev_d * 1.05) {
      stable = true;
      break;
    }
    prev_g = g;
    prev_d = d;
  }
  rep.g_hat = g;
  rep.deriv_sup = d;
  rep.verdict = stable;
  return rep;
}

PositivityReport check_positivity_conditions(const PointwiseMap& map,
                                             double eps, double t_max,
                                             const LatticeOptions& opts) {
  if (map.domain == Domain::all_reals)
    throw CapabilityError(
        "check_positivity_conditions: map must live on a nonnegative or "
        "positive domain");
  if (!map.has_time_derivative() || !map.has_second_derivative())
    throw CapabilityError(
        "check_positivity_conditions: needs dpsi_dt and d2psi_dy2");
  if (!(eps > 0.0))
    throw DomainError("check_positivity_conditions: eps must be > 0");

  const auto ts = time_lattice(t_max, opts.n_t);
  // Probe (0, eps): linear points plus log-spaced points toward 0.
  std::vector<double> ys;
  ys.reserve(static_cast<std::size_t>(opts.n_y + opts.n_log));
  for (int i = 1; i <= opts.n_y; ++i)
    ys.push_back(eps * double(i) / double(opts.n_y + 1));
  const double log_floor = std::log(opts.log_floor_rel);
  for (int i = 1; i <= opts.n_log; ++i)
    ys.push_back(eps * std::exp(log_floor * double(i) / double(opts.n_log)));

  PositivityReport rep;
  rep.zero_set_ok = true;
  const double inf = std::numeric_limits<double>::infinity();
  rep.inf_time_ratio = inf;
  rep.inf_slope = inf;
  rep.inf_curvature = inf;

  for (double t : ts) {
    if (map.domain == Domain::nonneg) {
      const double at0 = map.psi(t, 0.0);
      if (!(std::abs(at0) <= 1e-14)) rep.zero_set_ok = false;
    }
    for (double y : ys) {
      const double p = map.psi(t, y);
      if (!(p > 0.0)) rep.zero_set_ok = false;
      const double r = map.dpsi_dt(t, y) / p;
      const double s = map.dpsi_dy(t, y);
      const double c = p * map.d2psi_dy2(t, y);
      rep.inf_time_ratio = std::min(rep.inf_time_ratio, r);
      rep.inf_slope = std::min(rep.inf_slope, s);
      rep.inf_curvature = std::min(rep.inf_curvature, c);
    }
  }
  auto bounded_below = [&](double v) {
    return std::isfinite(v) ? v > opts.inf_floor : v == inf;
  };
  rep.time_ratio_ok = bounded_below(rep.inf_time_ratio);
  rep.slope_ok = bounded_below(rep.inf_slope);
  rep.curvature_ok = bounded_below(rep.inf_curvature);
  return rep;
}

StructuralLipschitzBound structural_lipschitz_bound(
    const PointwiseMap& map, double n, double t_max, double k_delta,
    const LatticeOptions& opts) {
  if (!map.has_second_derivative())
    throw CapabilityError("structural_lipschitz_bound: needs d2psi_dy2");
  StructuralLipschitzBound b;
  b.deriv_sup = estimate_local_lipschitz(map, n, t_max, k_delta, opts);
  const auto ts = time_lattice(t_max, opts.n_t);
  const auto ys = state_lattice(map.domain, n * k_delta, opts);
  b.curv_sup = lattice_sup_abs(map.d2psi_dy2, ts, ys, opts.deriv_cap);
  const double k2 = k_delta * k_delta;
  b.lifted_bound = std::sqrt(k2 * b.deriv_sup * b.deriv_sup +
                             2.0 * b.deriv_sup * b.deriv_sup +
                             2.0 * k2 * b.curv_sup * b.curv_sup * n * n);
  return b;
}

double derivative_consistency_error(const PointwiseMap& map, double t_max,
                                    double y_lo, double y_hi,
                                    const LatticeOptions& opts) {
  const auto ts = time_lattice(t_max, opts.n_t);
  double worst = 0.0;
  const int m = opts.n_y;
  for (double t : ts) {
    for (int i = 0; i < m; ++i) {
      const double y = y_lo + (y_hi - y_lo) * double(i) / double(m - 1);
      const double h = 1e-6 * std::max(1.0, std::abs(y));
      if (!in_domain(map.domain, y - h) || !in_domain(map.domain, y + h))
        continue;
      const double fd = (map.psi(t, y + h) - map.psi(t, y - h)) / (2.0 * h);
      const double an = map.dpsi_dy(t, y);
      const double scale = std::max({1.0, std::abs(fd), std::abs(an)});
      worst = std::max(worst, std::abs(fd - an) / scale);
    }
  }
  return worst;
}

// --- families ---------------------------------------------------------

PointwiseMap make_cev(double gamma, std::function<double(double)> beta,
                      std::function<double(double)> beta_prime) {
  if (!(gamma >= 1.0)) {
    std::ostringstream msg;
    msg << "make_cev: state exponent " << gamma
        << " < 1 rejected: the lifted map cannot be locally Lipschitz near "
           "0 on any band";
    throw DomainError(msg.str());
  }
  if (!beta) throw DomainError("make_cev: beta must be provided");
  PointwiseMap m;
  m.domain = Domain::nonneg;
  m.family = MapFamily::cev;
  m.lipschitz_unsafe = gamma > 1.0 && gamma < 2.0;
  m.psi = [gamma, beta](double t, double y) {
    return beta(t) * std::pow(y, gamma);
  };
  m.dpsi_dy = [gamma, beta](double t, double y) {
    return gamma * beta(t) * std::pow(y, gamma - 1.0);
  };
  m.d2psi_dy2 = [gamma, beta](double t, double y) {
    const double coef = gamma * (gamma - 1.0);
    if (coef == 0.0) return 0.0;
    return coef * beta(t) * std::pow(y, gamma - 2.0);
  };
  if (beta_prime) {
    m.dpsi_dt = [gamma, beta_prime](double t, double y) {
      return beta_prime(t) * std::pow(y, gamma);
    };
  } else {
    // Constant-in-time beta is the default calling convention.
    m.dpsi_dt = [](double, double) { return 0.0; };
  }
  return m;
}

PointwiseMap make_cev(double gamma, double beta_const) {
  if (!(beta_const > 0.0)) throw DomainError("make_cev: beta must be > 0");
  return make_cev(
      gamma, [beta_const](double) { return beta_const; },
      [](double) { return 0.0; });
}

namespace {

// Exponent profile of the regularized power map: 1 on [0, eps], gamma from
// 2*eps on, smoothstep bridge in between (C^1, flat at both ends).
struct TildeExponent {
  double gamma, eps;
  double value(double y) const {
    if (y <= eps) return 1.0;
    if (y >= 2.0 * eps) return gamma;
    const double u = (y - eps) / eps;
    return 1.0 + (gamma - 1.0) * u * u * (3.0 - 2.0 * u);
  }
  double deriv(double y) const {
    if (y <= eps || y >= 2.0 * eps) return 0.0;
    const double u = (y - eps) / eps;
    return (gamma - 1.0) * 6.0 * u * (1.0 - u) / eps;
  }
  double second(double y) const {
    if (y <= eps || y >= 2.0 * eps) return 0.0;
    const double u = (y - eps) / eps;
    return (gamma - 1.0) * (6.0 - 12.0 * u) / (eps * eps);
  }
};

}  // namespace

PointwiseMap make_cev_tilde(double gamma, double eps) {
  if (!(gamma > 1.0))
    throw DomainError("make_cev_tilde: only exponents > 1 need regularizing");
  if (!(eps > 0.0)) throw DomainError("make_cev_tilde: eps must be > 0");
  const TildeExponent ex{gamma, eps};
  PointwiseMap m;
  m.domain = Domain::nonneg;
  m.family = MapFamily::cev_tilde;
  m.psi = [ex](double, double y) {
    if (y == 0.0) return 0.0;
    return std::pow(y, ex.value(y));
  };
  // d/dy y^{g(y)} = g(y) y^{g(y)-1} + y^{g(y)} log(y) g'(y).
  m.dpsi_dy = [ex](double, double y) {
    if (y == 0.0) return 1.0;  // identity branch near 0
    const double g = ex.value(y);
    const double gp = ex.deriv(y);
    const double p = std::pow(y, g);
    return g * p / y + p * std::log(y) * gp;
  };
  m.d2psi_dy2 = [ex](double, double y) {
    if (y <= ex.eps) return 0.0;
    const double g = ex.value(y);
    const double gp = ex.deriv(y);
    const double gpp = ex.second(y);
    const double ln = std::log(y);
    const double p = std::pow(y, g);
    const double a = gp * ln + g / y;  // (log psi)'
    return p * (a * a + gpp * ln + 2.0 * gp / y - g / (y * y));
  };
  m.dpsi_dt = [](double, double) { return 0.0; };
  return m;
}

PointwiseMap make_exp_form(const PointwiseMap& psi_tilde) {
  if (psi_tilde.domain == Domain::all_reals)
    throw DomainError(
        "make_exp_form: psi_tilde must live on a nonnegative or positive "
        "domain");
  PointwiseMap m;
  m.domain = psi_tilde.domain;
  m.family = MapFamily::exp_form;
  const auto base = psi_tilde;  // capture by value: independent lifetime
  m.psi = [base](double t, double y) { return y * base.psi(t, y); };
  m.dpsi_dy = [base](double t, double y) {
    return base.psi(t, y) + y * base.dpsi_dy(t, y);
  };
  if (base.has_time_derivative())
    m.dpsi_dt = [base](double t, double y) { return y * base.dpsi_dt(t, y); };
  if (base.has_second_derivative())
    m.d2psi_dy2 = [base](double t, double y) {
      return 2.0 * base.dpsi_dy(t, y) + y * base.d2psi_dy2(t, y);
    };
  return m;
}

PointwiseMap make_separable(std::function<double(double)> beta,
                            std::function<double(double)> phi,
                            std::function<double(double)> dphi,
                            std::function<double(double)> d2phi,
                            std::function<double(double)> beta_prime,
                            Domain domain) {
  if (!beta || !phi || !dphi)
    throw DomainError("make_separable: beta, phi and dphi are required");
  PointwiseMap m;
  m.domain = domain;
  m.family = MapFamily::separable;
  m.psi = [beta, phi](double t, double y) { return beta(t) * phi(y); };
  m.dpsi_dy = [beta, dphi](double t, double y) { return beta(t) * dphi(y); };
  if (d2phi)
    m.d2psi_dy2 = [beta, d2phi](double t, double y) {
      return beta(t) * d2phi(y);
    };
  if (beta_prime)
    m.dpsi_dt = [beta_prime, phi](double t, double y) {
      return beta_prime(t) * phi(y);
    };
  return m;
}

PointwiseMap make_zero_map() {
  PointwiseMap m;
  m.psi = [](double, double) { return 0.0; };
  m.dpsi_dy = [](double, double) { return 0.0; };
  m.dpsi_dt = [](double, double) { return 0.0; };
  m.d2psi_dy2 = [](double, double) { return 0.0; };
  return m;
}

PointwiseMap make_const_map(double value) {
  PointwiseMap m;
  m.psi = [value](double, double) { return value; };
  m.dpsi_dy = [](double, double) { return 0.0; };
  m.dpsi_dt = [](double, double) { return 0.0; };
  m.d2psi_dy2 = [](double, double) { return 0.0; };
  return m;
}

PointwiseMap make_identity_map() {
  PointwiseMap m;
  m.psi = [](double, double y) { return y; };
  m.dpsi_dy = [](double, double) { return 1.0; };
  m.dpsi_dt = [](double, double) { return 0.0; };
  m.d2psi_dy2 = [](double, double) { return 0.0; };
  return m;
}

PointwiseMap make_const_drift(double a0) { return make_const_map(a0); }

PointwiseMap make_mean_revert_drift(double kappa, double theta) {
  PointwiseMap m;
  m.psi = [kappa, theta](double, double y) { return kappa * (theta - y); };
  m.dpsi_dy = [kappa](double, double) { return -kappa; };
  m.dpsi_dt = [](double, double) { return 0.0; };
  m.d2psi_dy2 = [](double, double) { return 0.0; };
  return m;
}

PointwiseMap make_proportional_drift(double mu) {
  PointwiseMap m;
  m.psi = [mu](double, double y) { return mu * y; };
  m.dpsi_dy = [mu](double, double) { return mu; };
  m.dpsi_dt = [](double, double) { return 0.0; };
  m.d2psi_dy2 = [](double, double) { return 0.0; };
  return m;
}

CoefficientSpec make_coefficients(PointwiseMap drift, PointwiseMap diffusion) {
  auto rank = [](Domain d) {
    switch (d) {
      case Domain::pos: return 0;
      case Domain::nonneg: return 1;
      case Domain::all_reals: return 2;
    }
    return 2;
  };
  if (rank(diffusion.domain) > rank(drift.domain))
    throw DomainError(
        "make_coefficients: diffusion domain must be contained in the drift "
        "domain");
  return CoefficientSpec{std::move(drift), std::move(diffusion)};
}

}  // namespace fwdcurve
