#include "fwdcurve/solver.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "fwdcurve/operators.hpp"

namespace fwdcurve {

int validate_sim_config(const SimConfig& sim) {
  if (!(sim.dt > 0.0)) throw DomainError("SimConfig: dt must be > 0");
  if (!(sim.horizon > 0.0)) throw DomainError("SimConfig: horizon must be > 0");
  if (sim.n_paths < 1) throw DomainError("SimConfig: n_paths must be >= 1");
  if (sim.snapshot_stride < 1)
    throw DomainError("SimConfig: snapshot_stride must be >= 1");
  if (!(sim.blowup_norm > 0.0))
    throw DomainError("SimConfig: blowup_norm must be > 0");
  const double steps = sim.horizon / sim.dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-12 * std::max(1.0, steps))
    throw DomainError("SimConfig: dt must divide horizon");
  if (sim.track_maturity && !(*sim.track_maturity >= 0.0))
    throw DomainError("SimConfig: track_maturity must be >= 0");
  return static_cast<int>(rounded);
}

CurveGrid step_mild_with_increment(const CurveGrid& g, double t,
                                   const CoefficientSpec& coeffs,
                                   const CurveGrid& dW, double dt) {
  ensure_same_config(g, dW, "step_mild");
  const CurveGrid a = lift(coeffs.drift, t, g);
  const CurveGrid s = lift(coeffs.diffusion, t, g);
  const int n = g.config->n_nodes();
  CurveGrid pre = g;
  for (int i = 0; i < n; ++i)
    pre.values[i] = g.values[i] + dt * a.values[i] + s.values[i] * dW.values[i];
  pre.tail = g.tail + dt * a.tail + s.tail * dW.tail;
  return shift(pre, dt);
}

CurveGrid step_mild(const CurveGrid& g, double t, const CoefficientSpec& coeffs,
                    const CovarianceOperator& q, double dt,
                    const NoiseStream& stream) {
  return step_mild_with_increment(g, t, coeffs,
                                  sample_increment(q, dt, stream), dt);
}

namespace {

bool all_finite(const CurveGrid& g) {
  for (double v : g.values)
    if (!std::isfinite(v)) return false;
  return std::isfinite(g.tail);
}

void record_positivity(PathResult& out, const CurveGrid& g, double t) {
  const int n = g.config->n_nodes();
  for (int i = 0; i < n; ++i)
    if (g.values[i] <= 0.0)
      out.positivity_violations.push_back({t, i, g.values[i]});
  if (g.tail <= 0.0) out.positivity_violations.push_back({t, n, g.tail});
}

}  // namespace

PathResult simulate_path(const CurveGrid& g0, const CoefficientSpecPtr& coeffs,
                         const CovariancePtr& q, const SimConfig& sim,
                         std::uint64_t path_id, const StepObserver& observer) {
  if (!coeffs) throw DomainError("simulate_path: null coefficients");
  if (!q) throw DomainError("simulate_path: null covariance");
  ensure_same_config(g0, q->eigenfunction(0), "simulate_path");
  const int n_steps = validate_sim_config(sim);

  PathResult out;
  out.path_id = path_id;
  out.master_seed = sim.master_seed;
  out.dt = sim.dt;
  out.dynamics = coeffs;
  out.snapshots.emplace_back(0.0, g0);
  if (sim.track_maturity)
    out.maturity_track.push_back(delta_eval(g0, *sim.track_maturity));

  CurveGrid g = g0;
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * sim.dt;
    const NoiseStream stream{sim.master_seed, path_id,
                             static_cast<std::uint64_t>(k),
                             NoiseStream::kPurposeIncrement};
    const CurveGrid dW = sample_increment(*q, sim.dt, stream);
    if (observer) observer(k, t, g, dW);
    CurveGrid next;
    try {
      next = step_mild_with_increment(g, t, *coeffs, dW, sim.dt);
    } catch (const DomainViolationError& e) {
      out.stopped_at = t;
      out.stop_reason = std::string("domain violation: ") + e.what();
      break;
    } catch (const RangeError& e) {
      out.stopped_at = t;
      out.stop_reason = std::string("range overflow: ") + e.what();
      break;
    }
    const double t_next = (k + 1) * sim.dt;
    if (!all_finite(next) || norm(next) > sim.blowup_norm) {
      // The diverged state is discarded; the path ends at the last state
      // that passed the finiteness and norm checks.
      out.stopped_at = t;
      out.stop_reason = "blow-up";
      break;
    }
    g = std::move(next);
    out.steps_done = k + 1;
    if (sim.positivity_monitor) record_positivity(out, g, t_next);
    if (sim.track_maturity) {
      const double x = *sim.track_maturity - t_next;
      // Freeze at delivery once calendar time passes it.
      out.maturity_track.push_back(x >= 0.0 ? delta_eval(g, x)
                                            : out.maturity_track.back());
    }
    const bool last = (k + 1 == n_steps);
    if ((k + 1) % sim.snapshot_stride == 0 || last)
      out.snapshots.emplace_back(t_next, g);
  }
  // A stopped path still ends with its last valid state, whatever the
  // snapshot stride.
  if (out.stopped_at && out.snapshots.back().first != *out.stopped_at)
    out.snapshots.emplace_back(*out.stopped_at, g);
  return out;
}

PathEnsemble simulate_ensemble(const CurveGrid& g0,
                               const CoefficientSpecPtr& coeffs,
                               const CovariancePtr& q, const SimConfig& sim,
                               unsigned n_threads) {
  validate_sim_config(sim);
  PathEnsemble ens;
  ens.sim = sim;
  ens.shift_interpolated = !g0.config->is_node_multiple(sim.dt);
  ens.paths.resize(static_cast<std::size_t>(sim.n_paths));

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned workers = n_threads == 0 ? hw : n_threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(sim.n_paths));

  // Work is claimed path-by-path from an atomic counter.  Each path's noise
  // is a pure function of (seed, path_id, step), so the schedule cannot
  // change any number.
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  auto work = [&]() {
    for (;;) {
      const int p = next.fetch_add(1);
      if (p >= sim.n_paths || failed.load()) break;
      try {
        ens.paths[static_cast<std::size_t>(p)] = simulate_path(
            g0, coeffs, q, sim, static_cast<std::uint64_t>(p));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw DomainError("simulate_ensemble: " + first_error);

  for (const auto& p : ens.paths) {
    if (!p.stopped_at) continue;
    if (p.stop_reason == "blow-up")
      ++ens.blowup_count;
    else
      ++ens.domain_stop_count;
  }
  return ens;
}

void replay_path(const PathResult& path, const CovarianceOperator& q,
                 const StepObserver& observer) {
  if (!path.dynamics)
    throw CapabilityError("replay_path: path lacks dynamics metadata");
  if (path.snapshots.empty() || path.snapshots.front().first != 0.0)
    throw CapabilityError("replay_path: path lacks its initial state");
  if (!(path.dt > 0.0))
    throw CapabilityError("replay_path: path lacks step metadata");
  CurveGrid g = path.snapshots.front().second;
  for (int k = 0; k < path.steps_done; ++k) {
    const double t = k * path.dt;
    const NoiseStream stream{path.master_seed, path.path_id,
                             static_cast<std::uint64_t>(k),
                             NoiseStream::kPurposeIncrement};
    const CurveGrid dW = sample_increment(q, path.dt, stream);
    if (observer) observer(k, t, g, dW);
    g = step_mild_with_increment(g, t, *path.dynamics, dW, path.dt);
  }
}

ExpModelReport exp_model_check(const CurveGrid& g0,
                               const CoefficientSpecPtr& coeffs,
                               const CovariancePtr& q, const SimConfig& sim,
                               bool include_volatility_correction) {
  if (!coeffs) throw DomainError("exp_model_check: null coefficients");
  if (!q) throw DomainError("exp_model_check: null covariance");
  const int n_steps = validate_sim_config(sim);
  const CurveGrid vk = variance_kernel(*q);
  const int n = g0.config->n_nodes();

  ExpModelReport rep;
  rep.per_path.reserve(static_cast<std::size_t>(sim.n_paths));
  for (int p = 0; p < sim.n_paths; ++p) {
    CurveGrid g = g0;
    CurveGrid z = exp_map(g0);
    bool broke = false;
    for (int k = 0; k < n_steps && !broke; ++k) {
      const double t = k * sim.dt;
      const NoiseStream stream{sim.master_seed, static_cast<std::uint64_t>(p),
                               static_cast<std::uint64_t>(k),
                               NoiseStream::kPurposeIncrement};
      const CurveGrid dW = sample_increment(*q, sim.dt, stream);
      g = step_mild_with_increment(g, t, *coeffs, dW, sim.dt);

      if (cone_membership(z) != Cone::h_greater) {
        broke = true;
        break;
      }
      const CurveGrid lz = log_map(z);
      const CurveGrid a = lift(coeffs->drift, t, lz);
      const CurveGrid s = lift(coeffs->diffusion, t, lz);
      CurveGrid pre = z;
      const double half = include_volatility_correction ? 0.5 : 0.0;
      for (int i = 0; i < n; ++i) {
        const double drift_z =
            z.values[i] *
            (a.values[i] + half * s.values[i] * s.values[i] * vk.values[i]);
        pre.values[i] = z.values[i] + sim.dt * drift_z +
                        z.values[i] * s.values[i] * dW.values[i];
      }
      pre.tail = z.tail +
                 sim.dt * z.tail * (a.tail + half * s.tail * s.tail * vk.tail) +
                 z.tail * s.tail * dW.tail;
      z = shift(pre, sim.dt);
    }
    if (broke) {
      ++rep.transform_breakdowns;
      continue;
    }
    const CurveGrid eg = exp_map(g);
    double sup = std::abs(eg.tail - z.tail);
    for (int i = 0; i < n; ++i)
      sup = std::max(sup, std::abs(eg.values[i] - z.values[i]));
    rep.per_path.push_back(sup);
    rep.mean_sup_discrepancy += sup;
    rep.max_sup_discrepancy = std::max(rep.max_sup_discrepancy, sup);
  }
  if (!rep.per_path.empty())
    rep.mean_sup_discrepancy /= double(rep.per_path.size());
  return rep;
}

}  // namespace fwdcurve
