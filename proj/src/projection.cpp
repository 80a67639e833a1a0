#include "fwdcurve/projection.hpp"

#include <cmath>
#include <sstream>

namespace fwdcurve {

namespace {

double psi_at_zero(const PointwiseMap& map) {
  // Value of the diffusion at state 0 under the domain conventions; used to
  // decide whether 0 is absorbing.
  return eval_psi(map, 0.0, 0.0);
}

void validate_spec(const ProjectionSpec& spec) {
  if (!spec.coeffs) throw DomainError("ProjectionSpec: null coefficients");
  if (!spec.q) throw DomainError("ProjectionSpec: null covariance");
  if (!(spec.T >= 0.0)) throw DomainError("ProjectionSpec: T must be >= 0");
}

}  // namespace

double sde_step(double F, double t, const ProjectionSpec& spec, double dt,
                double z) {
  validate_spec(spec);
  const CoefficientSpec& c = *spec.coeffs;
  if (spec.absorb_at_zero && F == 0.0 && psi_at_zero(c.diffusion) == 0.0)
    return 0.0;
  const double a = eval_psi(c.drift, t, F);
  const double s = eval_psi(c.diffusion, t, F);
  const double cc = c_coeff(*spec.q, t, spec.T);
  const double next = F + a * dt + cc * s * std::sqrt(dt) * z;
  if (next <= 0.0 && spec.absorb_at_zero && psi_at_zero(c.diffusion) == 0.0)
    return 0.0;
  return next;
}

namespace {

double coupled_normal(const CovarianceOperator& q, double t, double T,
                      const NoiseStream& stream) {
  // Rescaled projection of the curve increment at the delivery; unit
  // variance by construction, and the volatility factor cancels exactly
  // against the one the scalar step multiplies back.
  const double cc = c_coeff(q, t, T);
  if (!(cc > 0.0))
    throw DegenerateError("simulate_F: volatility factor vanishes; coupled "
                          "projection undefined");
  double acc = 0.0;
  for (int j = 0; j < q.rank(); ++j) {
    acc += std::sqrt(q.lambda(j)) *
           stream.normal(static_cast<std::uint32_t>(j)) *
           delta_eval(q.eigenfunction(j), T - t);
  }
  return acc / cc;
}

}  // namespace

ScalarPathEnsemble simulate_F(const ProjectionSpec& spec, const SimConfig& sim,
                              NoiseMode mode) {
  validate_spec(spec);
  const int n_steps = validate_sim_config(sim);
  if (sim.horizon > spec.T + 1e-12)
    throw DomainError(
        "simulate_F: horizon extends past the delivery time; the scalar "
        "equation is only defined up to delivery");
  if (spec.T > spec.q->config()->x_max() + 1e-12)
    throw DomainError(
        "simulate_F: delivery lies beyond the curve domain at t=0");

  ScalarPathEnsemble ens;
  ens.dt = sim.dt;
  ens.paths.resize(static_cast<std::size_t>(sim.n_paths));
  for (int p = 0; p < sim.n_paths; ++p) {
    auto& path = ens.paths[static_cast<std::size_t>(p)];
    path.reserve(static_cast<std::size_t>(n_steps + 1));
    path.push_back(spec.F0);
    double F = spec.F0;
    bool absorbed = false;
    bool stopped = false;
    for (int k = 0; k < n_steps; ++k) {
      const double t = k * sim.dt;
      const NoiseStream stream{
          sim.master_seed, static_cast<std::uint64_t>(p),
          static_cast<std::uint64_t>(k),
          mode == NoiseMode::coupled ? NoiseStream::kPurposeIncrement
                                     : NoiseStream::kPurposeScalar};
      const double z = mode == NoiseMode::coupled
                           ? coupled_normal(*spec.q, t, spec.T, stream)
                           : stream.normal(0);
      try {
        F = sde_step(F, t, spec, sim.dt, z);
      } catch (const DomainViolationError&) {
        stopped = true;
        break;
      }
      path.push_back(F);
      if (F == 0.0) absorbed = true;
    }
    if (absorbed) ++ens.absorbed_count;
    if (stopped) ++ens.stopped_count;
  }
  return ens;
}

CompareReport compare_projection(const PathEnsemble& curve_paths,
                                 const ProjectionSpec& spec) {
  validate_spec(spec);
  const SimConfig& sim = curve_paths.sim;
  const auto& cfg = *spec.q->config();
  if (!cfg.is_node_multiple(sim.dt))
    throw CouplingError(
        "compare_projection: dt is not a node multiple; transport would "
        "interpolate and the projection identity would not be exact");
  const double pos = spec.T / cfg.spacing();
  if (std::abs(pos - std::round(pos)) > kGridSnapTol * std::max(1.0, pos))
    throw CouplingError(
        "compare_projection: delivery T is off-grid; point evaluation would "
        "interpolate");
  if (!sim.track_maturity ||
      std::abs(*sim.track_maturity - spec.T) > 1e-12)
    throw CouplingError(
        "compare_projection: ensemble was not simulated with a maturity "
        "track at the requested delivery");

  const ScalarPathEnsemble scalar =
      simulate_F(spec, sim, NoiseMode::coupled);

  CompareReport rep;
  double sum_c = 0.0, sum_s = 0.0, sum_c2 = 0.0, sum_s2 = 0.0;
  double sum_d = 0.0, sum_d2 = 0.0;
  for (std::size_t p = 0; p < curve_paths.paths.size(); ++p) {
    const PathResult& cp = curve_paths.paths[p];
    const auto& sp = scalar.paths[p];
    if (cp.stopped_at || cp.maturity_track.size() != sp.size()) continue;
    double sup = 0.0;
    for (std::size_t k = 0; k < sp.size(); ++k)
      sup = std::max(sup, std::abs(cp.maturity_track[k] - sp[k]));
    rep.per_path_sup_gap.push_back(sup);
    rep.max_sup_gap = std::max(rep.max_sup_gap, sup);
    rep.mean_sup_gap += sup;
    const double tc = cp.maturity_track.back();
    const double ts = sp.back();
    sum_c += tc;
    sum_s += ts;
    sum_c2 += tc * tc;
    sum_s2 += ts * ts;
    sum_d += tc - ts;
    sum_d2 += (tc - ts) * (tc - ts);
    ++rep.paths_compared;
  }
  const double N = double(rep.paths_compared);
  if (rep.paths_compared > 1) {
    rep.mean_sup_gap /= N;
    rep.terminal_mean_curve = sum_c / N;
    rep.terminal_mean_scalar = sum_s / N;
    rep.terminal_var_curve = (sum_c2 - sum_c * sum_c / N) / (N - 1.0);
    rep.terminal_var_scalar = (sum_s2 - sum_s * sum_s / N) / (N - 1.0);
    const double var_d = (sum_d2 - sum_d * sum_d / N) / (N - 1.0);
    rep.terminal_diff_se = std::sqrt(std::max(0.0, var_d) / N);
    const double mean_d = sum_d / N;
    // Paired comparison; a zero-variance difference (exact coupling) passes
    // when the means agree to rounding.
    rep.terminal_mean_compatible =
        std::abs(mean_d) <=
        std::max(3.0 * rep.terminal_diff_se, 1e-10 * (1.0 + std::abs(sum_c / N)));
  }
  return rep;
}

namespace {

// The scalar equation has a closed-form solution when the diffusion is
// state-proportional (psi(t, y) = beta y) and the volatility factor is
// constant in t; then F_t = F0 exp(sigma B_t - sigma^2 t / 2).
struct ExactLognormal {
  bool available = false;
  double sigma = 0.0;
};

ExactLognormal detect_exact(const ProjectionSpec& spec, int n_steps,
                            double dt) {
  ExactLognormal ex;
  const CoefficientSpec& c = *spec.coeffs;
  // Drift must vanish identically on a probe set.
  for (double y : {0.25, 1.0, 3.0})
    if (std::abs(eval_psi(c.drift, 0.0, y)) > 1e-14) return ex;
  // Diffusion proportional to the state with a time-constant coefficient.
  const double b = eval_psi(c.diffusion, 0.0, 1.0);
  for (double y : {0.5, 1.0, 2.0, 4.0}) {
    if (std::abs(eval_psi(c.diffusion, 0.0, y) - b * y) >
        1e-12 * std::max(1.0, std::abs(b * y)))
      return ex;
  }
  double c0 = c_coeff(*spec.q, 0.0, spec.T);
  for (int k = 1; k < n_steps; ++k) {
    const double ck = c_coeff(*spec.q, k * dt, spec.T);
    if (std::abs(ck - c0) > 1e-12 * std::max(1.0, c0)) return ex;
  }
  ex.available = true;
  ex.sigma = b * c0;
  return ex;
}

}  // namespace

std::vector<ConvergenceRow> projection_convergence(
    const CurveGrid& g0, const ProjectionSpec& spec, const SimConfig& base_sim,
    const std::vector<double>& dts) {
  validate_spec(spec);
  std::vector<ConvergenceRow> rows;
  rows.reserve(dts.size());
  for (double dt : dts) {
    SimConfig sim = base_sim;
    sim.dt = dt;
    sim.track_maturity = spec.T;
    sim.snapshot_stride = 1 << 30;  // only endpoints; the track is enough
    const int n_steps = validate_sim_config(sim);
    const PathEnsemble ens = simulate_ensemble(g0, spec.coeffs, spec.q, sim);
    const ScalarPathEnsemble scalar =
        simulate_F(spec, sim, NoiseMode::coupled);
    const ExactLognormal ex = detect_exact(spec, n_steps, dt);

    ConvergenceRow row;
    row.dt = dt;
    row.exact_available = ex.available;
    int counted = 0;
    for (std::size_t p = 0; p < ens.paths.size(); ++p) {
      const PathResult& cp = ens.paths[p];
      const auto& sp = scalar.paths[p];
      if (cp.stopped_at || cp.maturity_track.size() != sp.size()) continue;
      double gap = 0.0;
      for (std::size_t k = 0; k < sp.size(); ++k)
        gap = std::max(gap, std::abs(cp.maturity_track[k] - sp[k]));
      row.mean_sup_gap += gap;
      if (ex.available) {
        // Rebuild the driving Brownian path from the same coupled draws.
        double bw = 0.0;
        double err = 0.0;
        for (std::size_t k = 1; k < sp.size(); ++k) {
          const double t_prev = double(k - 1) * dt;
          const NoiseStream stream{sim.master_seed,
                                   static_cast<std::uint64_t>(p),
                                   static_cast<std::uint64_t>(k - 1),
                                   NoiseStream::kPurposeIncrement};
          bw += std::sqrt(dt) *
                coupled_normal(*spec.q, t_prev, spec.T, stream);
          const double t = double(k) * dt;
          const double exact =
              spec.F0 *
              std::exp(ex.sigma * bw - 0.5 * ex.sigma * ex.sigma * t);
          err = std::max(err,
                         std::abs(cp.maturity_track[k] - exact));
        }
        row.mean_err_vs_exact += err;
      }
      ++counted;
    }
    if (counted > 0) {
      row.mean_sup_gap /= double(counted);
      row.mean_err_vs_exact /= double(counted);
    }
    rows.push_back(row);
  }
  return rows;
}

double fitted_order(const std::vector<double>& dts,
                    const std::vector<double>& errs) {
  if (dts.size() != errs.size() || dts.size() < 2)
    throw DomainError("fitted_order: need matching tables with >= 2 rows");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = double(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log2(dts[i]);
    const double y = std::log2(std::max(errs[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fwdcurve
