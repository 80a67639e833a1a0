#include <cmath>
#include <memory>

#include "doctest.h"
#include "fwdcurve/projection.hpp"

using namespace fwdcurve;

namespace {

CovariancePtr const_noise(const SpaceConfigPtr& cfg, double lambda) {
  EigenPairSpec p;
  p.lambda = lambda;
  p.shape.kind = EigenShape::Kind::constant;
  return CovarianceOperator::make(cfg, {p});
}

CoefficientSpecPtr coeffs_of(PointwiseMap drift, PointwiseMap diffusion) {
  return std::make_shared<const CoefficientSpec>(
      make_coefficients(std::move(drift), std::move(diffusion)));
}

}  // namespace

TEST_CASE("one Euler step of the delivery equation: plain arithmetic") {
  auto cfg = SpaceConfig::make(1.0, 2.0, 9);
  ProjectionSpec spec;
  spec.T = 1.0;
  spec.F0 = 1.0;
  spec.q = const_noise(cfg, 1.0);  // c(t, T) = 1
  spec.coeffs = coeffs_of(make_const_drift(2.0), make_const_map(1.0));
  const double dt = 0.01, z = 0.1;
  const double got = sde_step(1.0, 0.0, spec, dt, z);
  CHECK(got == doctest::Approx(1.0 + 2.0 * dt + std::sqrt(dt) * z)
                   .epsilon(1e-15));
}

TEST_CASE("absorption at zero for a diffusion vanishing there") {
  auto cfg = SpaceConfig::make(1.0, 2.0, 9);
  ProjectionSpec spec;
  spec.T = 1.0;
  spec.F0 = 1.0;
  spec.q = const_noise(cfg, 1.0);
  spec.coeffs = coeffs_of(make_zero_map(), make_cev(1.0, 1.0));

  SUBCASE("a crossing step lands exactly on zero and stays") {
    const double f1 = sde_step(0.01, 0.0, spec, 0.01, -50.0);
    CHECK(f1 == 0.0);
    CHECK(sde_step(0.0, 0.5, spec, 0.01, 3.0) == 0.0);
  }

  SUBCASE("without absorption the crossing goes negative and the next step "
          "rejects it") {
    spec.absorb_at_zero = false;
    const double f1 = sde_step(0.01, 0.0, spec, 0.01, -50.0);
    CHECK(f1 < 0.0);
    CHECK_THROWS_AS(sde_step(f1, 0.01, spec, 0.01, 0.0),
                    DomainViolationError);
  }

  SUBCASE("ensemble counts absorbed paths") {
    spec.coeffs = coeffs_of(make_zero_map(), make_cev(1.0, 3.0));
    SimConfig sim;
    sim.dt = 0.25;
    sim.horizon = 1.0;
    sim.n_paths = 200;
    sim.master_seed = 5;
    auto ens = simulate_F(spec, sim, NoiseMode::independent);
    CHECK(ens.absorbed_count > 0);
    for (const auto& path : ens.paths)
      for (double v : path) CHECK(v >= 0.0);
  }
}

TEST_CASE("horizon and domain guards of the delivery equation") {
  auto cfg = SpaceConfig::make(1.0, 2.0, 9);
  ProjectionSpec spec;
  spec.T = 0.5;
  spec.F0 = 1.0;
  spec.q = const_noise(cfg, 1.0);
  spec.coeffs = coeffs_of(make_zero_map(), make_const_map(1.0));
  SimConfig sim;
  sim.dt = 0.25;
  sim.horizon = 1.0;  // past delivery
  CHECK_THROWS_AS(simulate_F(spec, sim, NoiseMode::independent), DomainError);
  spec.T = 5.0;  // beyond the curve domain
  sim.horizon = 1.0;
  CHECK_THROWS_AS(simulate_F(spec, sim, NoiseMode::independent), DomainError);
}

TEST_CASE("coupled scalar equation reproduces the curve projection") {
  auto cfg = SpaceConfig::make(1.0, 1.0, 17);
  auto q = const_noise(cfg, 0.04);
  auto coeffs = coeffs_of(make_zero_map(), make_cev(1.0, 1.0));
  auto g0 = make_flat_curve(cfg, 1.0);

  SimConfig sim;
  sim.dt = cfg->spacing();
  sim.horizon = 0.5;
  sim.n_paths = 12;
  sim.master_seed = 99;
  sim.track_maturity = 1.0;

  ProjectionSpec spec;
  spec.T = 1.0;
  spec.F0 = 1.0;
  spec.q = q;
  spec.coeffs = coeffs;

  auto ens = simulate_ensemble(g0, coeffs, q, sim, 1);
  auto rep = compare_projection(ens, spec);
  CHECK(rep.paths_compared == 12);
  CHECK(rep.mean_sup_gap < 1e-12);
  CHECK(rep.max_sup_gap < 1e-11);
  CHECK(rep.terminal_mean_curve ==
        doctest::Approx(rep.terminal_mean_scalar).epsilon(1e-12));
  CHECK(rep.terminal_mean_compatible);
}

TEST_CASE("cross-validation refuses unverifiable discretizations") {
  auto cfg = SpaceConfig::make(1.0, 1.0, 17);  // spacing 1/16
  auto q = const_noise(cfg, 0.04);
  auto coeffs = coeffs_of(make_zero_map(), make_cev(1.0, 1.0));
  auto g0 = make_flat_curve(cfg, 1.0);

  ProjectionSpec spec;
  spec.T = 1.0;
  spec.F0 = 1.0;
  spec.q = q;
  spec.coeffs = coeffs;

  SimConfig sim;
  sim.dt = cfg->spacing();
  sim.horizon = 0.5;
  sim.n_paths = 2;
  sim.track_maturity = 1.0;

  SUBCASE("dt off the node lattice") {
    SimConfig bad = sim;
    bad.dt = 0.1;  // divides the horizon, but not a spacing multiple
    auto ens = simulate_ensemble(g0, coeffs, q, bad, 1);
    CHECK_THROWS_AS(compare_projection(ens, spec), CouplingError);
  }
  SUBCASE("delivery off the grid") {
    SimConfig t2 = sim;
    t2.track_maturity = 0.7;
    auto ens = simulate_ensemble(g0, coeffs, q, t2, 1);
    ProjectionSpec off = spec;
    off.T = 0.7;
    CHECK_THROWS_AS(compare_projection(ens, off), CouplingError);
  }
  SUBCASE("missing or mismatched maturity track") {
    SimConfig untracked = sim;
    untracked.track_maturity.reset();
    auto ens = simulate_ensemble(g0, coeffs, q, untracked, 1);
    CHECK_THROWS_AS(compare_projection(ens, spec), CouplingError);

    SimConfig other = sim;
    other.track_maturity = 0.5;
    auto ens2 = simulate_ensemble(g0, coeffs, q, other, 1);
    CHECK_THROWS_AS(compare_projection(ens2, spec), CouplingError);
  }
}

TEST_CASE("refinement study against the closed-form benchmark") {
  auto cfg = SpaceConfig::make(1.0, 1.0, 65);
  auto q = const_noise(cfg, 0.04);
  auto coeffs = coeffs_of(make_zero_map(), make_cev(1.0, 1.0));
  auto g0 = make_flat_curve(cfg, 1.0);

  ProjectionSpec spec;
  spec.T = 1.0;
  spec.F0 = 1.0;
  spec.q = q;
  spec.coeffs = coeffs;

  SimConfig sim;
  sim.dt = 1.0 / 16;
  sim.horizon = 1.0;
  sim.n_paths = 48;
  sim.master_seed = 17;
  sim.snapshot_stride = 1 << 30;

  SUBCASE("state-proportional dynamics admit the closed form") {
    auto rows = projection_convergence(g0, spec, sim,
                                       {1.0 / 16, 1.0 / 32, 1.0 / 64});
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
      CHECK(r.exact_available);
      // The coupling identity itself holds at rounding level for every dt.
      CHECK(r.mean_sup_gap < 1e-10);
    }
    CHECK(rows[1].mean_err_vs_exact < rows[0].mean_err_vs_exact);
    CHECK(rows[2].mean_err_vs_exact < rows[1].mean_err_vs_exact);
    std::vector<double> errs;
    for (const auto& r : rows) errs.push_back(r.mean_err_vs_exact);
    const double order = fitted_order({1.0 / 16, 1.0 / 32, 1.0 / 64}, errs);
    CHECK(order > 0.25);
    CHECK(order < 1.1);
  }

  SUBCASE("a drift disables the closed form but not the coupling check") {
    ProjectionSpec drifted = spec;
    drifted.coeffs = coeffs_of(make_mean_revert_drift(0.5, 1.0),
                               make_cev(1.0, 1.0));
    auto rows = projection_convergence(g0, drifted, sim, {1.0 / 16, 1.0 / 32});
    for (const auto& r : rows) {
      CHECK_FALSE(r.exact_available);
      CHECK(r.mean_sup_gap < 1e-10);
    }
  }
}

TEST_CASE("fitted order recovers a synthetic slope exactly") {
  std::vector<double> dts{0.25, 0.125, 0.0625, 0.03125};
  std::vector<double> errs;
  for (double dt : dts) errs.push_back(2.0 * std::sqrt(dt));
  CHECK(fitted_order(dts, errs) == doctest::Approx(0.5).epsilon(1e-12));
  std::vector<double> first;
  for (double dt : dts) first.push_back(0.3 * dt);
  CHECK(fitted_order(dts, first) == doctest::Approx(1.0).epsilon(1e-12));
}
