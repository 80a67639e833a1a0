#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fwdcurve/noise.hpp"
#include "fwdcurve/pointwise.hpp"

namespace fwdcurve {

using CoefficientSpecPtr = std::shared_ptr<const CoefficientSpec>;

struct SimConfig {
  double dt = 1e-2;
  double horizon = 1.0;
  int n_paths = 1;
  std::uint64_t master_seed = 0;
  double blowup_norm = 1e6;
  int snapshot_stride = 1;
  bool positivity_monitor = false;
  /// When set, delta_eval(g_t, T - t) is recorded after every step (and at
  /// t = 0), freezing at T once t passes it.  This is what fixed-delivery
  /// cross-validation consumes.
  std::optional<double> track_maturity;
};

/// Validates dt > 0, horizon > 0, dt divides horizon within 1e-12, paths
/// >= 1; returns the step count.
int validate_sim_config(const SimConfig& sim);

struct PositivityViolation {
  double t = 0.0;
  int node_index = 0;  // n_nodes denotes the tail
  double value = 0.0;
};

struct PathResult {
  std::uint64_t path_id = 0;
  /// (t, curve) pairs: always includes t = 0 and the last computed state.
  std::vector<std::pair<double, CurveGrid>> snapshots;
  /// Set when the path terminated early; holds the time of the failed step.
  std::optional<double> stopped_at;
  std::string stop_reason;
  std::vector<PositivityViolation> positivity_violations;
  std::vector<double> maturity_track;  // see SimConfig::track_maturity
  std::optional<double> rn_log_weight;

  // Replay metadata: with these, the exact noise the path consumed can be
  // regenerated draw for draw.
  std::uint64_t master_seed = 0;
  double dt = 0.0;
  int steps_done = 0;
  CoefficientSpecPtr dynamics;
};

struct PathEnsemble {
  std::vector<PathResult> paths;
  SimConfig sim;
  bool shift_interpolated = false;  // dt was not a node multiple
  int blowup_count = 0;
  int domain_stop_count = 0;
};

/// One step of the mild (semigroup) scheme: the drift and diffusion act
/// point-wise at the pre-step state, the transport is applied after the
/// increments are added:
///     g+ = shift( g + dt * drift(t, g) + diffusion(t, g) * dW, dt ).
CurveGrid step_mild_with_increment(const CurveGrid& g, double t,
                                   const CoefficientSpec& coeffs,
                                   const CurveGrid& dW, double dt);

CurveGrid step_mild(const CurveGrid& g, double t, const CoefficientSpec& coeffs,
                    const CovarianceOperator& q, double dt,
                    const NoiseStream& stream);

/// Called before each step with the pre-step state and the increment about
/// to be consumed.  Lets downstream modules accumulate path functionals
/// (stochastic integrals) without storing every increment.
using StepObserver =
    std::function<void(int step, double t, const CurveGrid& g,
                       const CurveGrid& dW)>;

PathResult simulate_path(const CurveGrid& g0, const CoefficientSpecPtr& coeffs,
                         const CovariancePtr& q, const SimConfig& sim,
                         std::uint64_t path_id,
                         const StepObserver& observer = {});

/// Runs all paths, splitting them over up to `n_threads` workers (0 means
/// hardware concurrency).  Results are identical for every thread count.
PathEnsemble simulate_ensemble(const CurveGrid& g0,
                               const CoefficientSpecPtr& coeffs,
                               const CovariancePtr& q, const SimConfig& sim,
                               unsigned n_threads = 0);

/// Replays a finished path: regenerates its increments and walks its states
/// again, invoking the observer exactly as the original run did.  Needs the
/// replay metadata and the initial snapshot; throws CapabilityError
/// otherwise.
void replay_path(const PathResult& path, const CovarianceOperator& q,
                 const StepObserver& observer);

/// Consistency check of the positive-curve (exponential) parametrization:
/// simulates g and, with the same noise, the transformed state z = exp(g)
/// whose drift gains the correction z * psi(t, log z)^2 * variance_kernel /
/// 2.  Reports how far exp(g_T) and z_T drift apart; the gap vanishes under
/// dt-refinement only when the correction is included
/// (`include_volatility_correction` exists to demonstrate that).
struct ExpModelReport {
  double mean_sup_discrepancy = 0.0;
  double max_sup_discrepancy = 0.0;
  int transform_breakdowns = 0;  // paths where z left the positive cone
  std::vector<double> per_path;
};

ExpModelReport exp_model_check(const CurveGrid& g0,
                               const CoefficientSpecPtr& coeffs,
                               const CovariancePtr& q, const SimConfig& sim,
                               bool include_volatility_correction = true);

}  // namespace fwdcurve
