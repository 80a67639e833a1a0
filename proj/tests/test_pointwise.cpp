#include <cmath>
#include <string>

#include "doctest.h"
#include "fwdcurve/pointwise.hpp"

using namespace fwdcurve;

namespace {
SpaceConfigPtr small_space() { return SpaceConfig::make(1.0, 5.0, 51); }

PointwiseMap square_map() {
  return make_separable([](double) { return 1.0; }, [](double y) { return y * y; },
                        [](double y) { return 2.0 * y; },
                        [](double) { return 2.0; }, [](double) { return 0.0; });
}

PointwiseMap sqrt_map() {
  auto m = make_separable([](double) { return 1.0; },
                          [](double y) { return std::sqrt(y); },
                          [](double y) { return 0.5 / std::sqrt(y); }, {}, {},
                          Domain::pos);
  return m;
}
}  // namespace

TEST_CASE("lifting applies the scalar map node-wise, tail included") {
  auto cfg = small_space();
  auto f = make_curve_from(cfg, [](double x) { return 1.0 + x; }, 6.0);
  auto g = lift(square_map(), 0.0, f);
  for (int i = 0; i < cfg->n_nodes(); ++i)
    CHECK(g.values[i] == f.values[i] * f.values[i]);
  CHECK(g.tail == 36.0);
}

TEST_CASE("domain enforcement names the offending node") {
  auto cfg = small_space();
  auto f = make_flat_curve(cfg, 1.0);
  f.values[17] = -0.5;
  auto cev = make_cev(2.0, 1.0);  // nonneg domain
  try {
    lift(cev, 0.0, f);
    FAIL("expected DomainViolationError");
  } catch (const DomainViolationError& e) {
    CHECK(e.node_index == 17);
    CHECK(e.value == -0.5);
  }
  // A negative tail is reported as node index n_nodes.
  auto t = make_flat_curve(cfg, 1.0);
  t.tail = -1.0;
  try {
    lift(cev, 0.0, t);
    FAIL("expected DomainViolationError");
  } catch (const DomainViolationError& e) {
    CHECK(e.node_index == cfg->n_nodes());
  }
}

TEST_CASE("local Lipschitz estimator oracles") {
  const double k = std::sqrt(2.0);  // unit weight rate

  SUBCASE("identity map: constant slope one") {
    CHECK(estimate_local_lipschitz(make_identity_map(), 1.0, 1.0, k) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("square map on the unit-norm band: slope 2 sqrt(2)") {
    // Curves of norm <= 1 reach |y| <= k_delta = sqrt(2); the slope of y^2
    // peaks at the band edge: 2 sqrt(2).
    CHECK(estimate_local_lipschitz(square_map(), 1.0, 1.0, k) ==
          doctest::Approx(2.8284271247461903).epsilon(1e-6));
    // Band scales linearly with the norm bound.
    CHECK(estimate_local_lipschitz(square_map(), 2.0, 1.0, k) ==
          doctest::Approx(2 * 2.8284271247461903).epsilon(1e-6));
  }

  SUBCASE("square-root map: unbounded slope near zero reported as infinity") {
    CHECK(std::isinf(estimate_local_lipschitz(sqrt_map(), 1.0, 1.0, k)));
  }
}

TEST_CASE("linear growth probe") {
  SUBCASE("identity: growth stabilizes") {
    auto rep = estimate_linear_growth(make_identity_map(), 1.0);
    CHECK(rep.verdict);
    CHECK(rep.g_hat <= 1.0 + 1e-9);
    CHECK(rep.deriv_sup == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("square map: growth keeps climbing, verdict false") {
    auto rep = estimate_linear_growth(square_map(), 1.0);
    CHECK_FALSE(rep.verdict);
  }
  SUBCASE("bounded oscillation: growth stabilizes") {
    auto osc = make_separable([](double) { return 1.0; },
                              [](double y) { return std::sin(y); },
                              [](double y) { return std::cos(y); });
    auto rep = estimate_linear_growth(osc, 1.0);
    CHECK(rep.verdict);
    CHECK(rep.deriv_sup <= 1.0 + 1e-9);
  }
}

TEST_CASE("positivity condition checker") {
  SUBCASE("state-proportional diffusion passes") {
    auto rep = check_positivity_conditions(make_cev(1.0, 1.0), 1e-2, 1.0);
    CHECK(rep.all_pass());
    CHECK(rep.inf_slope == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("quadratic diffusion passes with nonnegative infima") {
    auto rep = check_positivity_conditions(make_cev(2.0, 1.0), 1e-2, 1.0);
    CHECK(rep.all_pass());
    CHECK(rep.inf_slope >= 0.0);
    CHECK(rep.inf_curvature >= 0.0);
    CHECK(rep.inf_time_ratio >= 0.0);
  }
  SUBCASE("a diffusion not vanishing at zero fails the zero-set condition") {
    auto shifted = make_separable(
        [](double) { return 1.0; }, [](double y) { return y + 1.0; },
        [](double) { return 1.0; }, [](double) { return 0.0; },
        [](double) { return 0.0; }, Domain::nonneg);
    auto rep = check_positivity_conditions(shifted, 1e-2, 1.0);
    CHECK_FALSE(rep.zero_set_ok);
    CHECK_FALSE(rep.all_pass());
  }
  SUBCASE("whole-line maps and missing derivatives are refused") {
    CHECK_THROWS_AS(check_positivity_conditions(make_identity_map(), 1e-2, 1.0),
                    CapabilityError);
    CHECK_THROWS_AS(check_positivity_conditions(sqrt_map(), 1e-2, 1.0),
                    CapabilityError);
  }
}

TEST_CASE("structural bound for the lifted map") {
  const double k = std::sqrt(2.0);
  auto b = structural_lipschitz_bound(make_identity_map(), 2.0, 1.0, k);
  CHECK(b.deriv_sup == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b.curv_sup == doctest::Approx(0.0).epsilon(1e-9));
  // L_n = sqrt(k^2 L^2 + 2 L^2 + 2 k^2 M^2 n^2) with L=1, M=0: sqrt(4) = 2.
  CHECK(b.lifted_bound == doctest::Approx(2.0).epsilon(1e-9));

  auto s = structural_lipschitz_bound(square_map(), 1.0, 1.0, k);
  const double L = s.deriv_sup, M = s.curv_sup;
  CHECK(s.lifted_bound ==
        doctest::Approx(std::sqrt(k * k * L * L + 2 * L * L +
                                  2 * k * k * M * M))
            .epsilon(1e-12));
}

TEST_CASE("declared derivatives agree with finite differences") {
  CHECK(derivative_consistency_error(make_cev(2.0, 1.5), 1.0, 0.1, 5.0) <
        1e-4);
  CHECK(derivative_consistency_error(make_cev_tilde(1.5, 1e-2), 1.0, 1e-3,
                                     5.0) < 1e-4);
  auto osc = make_separable([](double) { return 1.0; },
                            [](double y) { return std::sin(y); },
                            [](double y) { return std::cos(y); });
  CHECK(derivative_consistency_error(osc, 1.0, -3.0, 3.0) < 1e-4);

  // A deliberately wrong derivative is caught.
  auto wrong = make_separable([](double) { return 1.0; },
                              [](double y) { return y * y; },
                              [](double y) { return 3.0 * y; });
  CHECK(derivative_consistency_error(wrong, 1.0, 0.5, 4.0) > 0.1);
}

TEST_CASE("power-law diffusion family") {
  SUBCASE("exponents below one are rejected outright") {
    CHECK_THROWS_AS(make_cev(0.5, 1.0), DomainError);
    CHECK_THROWS_AS(make_cev(0.99, 1.0), DomainError);
    try {
      make_cev(0.5, 1.0);
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
  }
  SUBCASE("nonpositive scale is rejected") {
    CHECK_THROWS_AS(make_cev(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(make_cev(1.0, -2.0), DomainError);
  }
  SUBCASE("safe and unsafe exponent ranges") {
    CHECK_FALSE(make_cev(1.0, 1.0).lipschitz_unsafe);
    CHECK(make_cev(1.5, 1.0).lipschitz_unsafe);
    CHECK(make_cev(1.999, 1.0).lipschitz_unsafe);
    CHECK_FALSE(make_cev(2.0, 1.0).lipschitz_unsafe);
    CHECK_FALSE(make_cev(3.0, 1.0).lipschitz_unsafe);
  }
  SUBCASE("values and derivatives") {
    auto m = make_cev(2.0, 1.5);
    CHECK(eval_psi(m, 0.0, 2.0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(eval_dpsi_dy(m, 0.0, 2.0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(m.domain == Domain::nonneg);
    CHECK(m.family == MapFamily::cev);
    CHECK(m.has_time_derivative());
    CHECK(m.has_second_derivative());
    CHECK_THROWS_AS(eval_psi(m, 0.0, -1.0), DomainViolationError);
  }
  SUBCASE("time-dependent scale") {
    auto m = make_cev(1.0, [](double t) { return 1.0 + t; },
                      [](double) { return 1.0; });
    CHECK(eval_psi(m, 1.0, 3.0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(m.dpsi_dt(1.0, 3.0) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("regularized power map") {
  const double gamma = 1.5, eps = 1e-2;
  auto m = make_cev_tilde(gamma, eps);

  SUBCASE("identity below eps, plain power above two eps") {
    CHECK(eval_psi(m, 0.0, 0.0) == 0.0);
    CHECK(eval_psi(m, 0.0, eps / 2) == doctest::Approx(eps / 2).epsilon(1e-14));
    CHECK(eval_dpsi_dy(m, 0.0, eps / 2) ==
          doctest::Approx(1.0).epsilon(1e-12));
    for (double y : {3 * eps, 0.5, 1.0, 4.0})
      CHECK(eval_psi(m, 0.0, y) ==
            doctest::Approx(std::pow(y, gamma)).epsilon(1e-13));
  }

  SUBCASE("bridge region is continuous") {
    const double left = eval_psi(m, 0.0, eps * (1 - 1e-9));
    const double right = eval_psi(m, 0.0, eps * (1 + 1e-9));
    CHECK(left == doctest::Approx(right).epsilon(1e-6));
    const double l2 = eval_psi(m, 0.0, 2 * eps * (1 - 1e-9));
    const double r2 = eval_psi(m, 0.0, 2 * eps * (1 + 1e-9));
    CHECK(l2 == doctest::Approx(r2).epsilon(1e-6));
  }

  SUBCASE("restores a finite Lipschitz estimate, stable under refinement") {
    CHECK_FALSE(m.lipschitz_unsafe);
    const double k = std::sqrt(2.0);
    LatticeOptions coarse, fine;
    coarse.n_y = 512;
    coarse.n_log = 256;
    fine.n_y = 2048;
    fine.n_log = 1024;
    const double lc = estimate_local_lipschitz(m, 1.0, 1.0, k, coarse);
    const double lf = estimate_local_lipschitz(m, 1.0, 1.0, k, fine);
    CHECK(std::isfinite(lc));
    CHECK(std::isfinite(lf));
    CHECK(std::abs(lc - lf) <= 0.05 * std::max(lc, lf));
    // The unregularized exponent in (1, 2) has no such bound near zero:
    // its slope y^{gamma-1} stays finite but its own derivative blows up;
    // the flag (not the estimator) is what warns about it.
    CHECK(make_cev(gamma, 1.0).lipschitz_unsafe);
  }
}

TEST_CASE("multiplicative form for the positive parametrization") {
  auto inner = make_cev(1.0, 0.2);  // psi_tilde(y) = 0.2 y
  SUBCASE("product structure and derivative") {
    // psi(y) = y * psi_tilde(y); with psi_tilde = 0.2 y this is 0.2 y^2.
    auto m = make_exp_form(inner);
    CHECK(eval_psi(m, 0.0, 3.0) == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(eval_dpsi_dy(m, 0.0, 3.0) == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(m.family == MapFamily::exp_form);
  }
  SUBCASE("whole-line inner maps are refused") {
    CHECK_THROWS_AS(make_exp_form(make_identity_map()), DomainError);
  }
}

TEST_CASE("coefficient pairs enforce domain containment") {
  // Diffusion on the half line with drift on the whole line is fine.
  CHECK_NOTHROW(make_coefficients(make_const_drift(0.1), make_cev(1.0, 1.0)));
  CHECK_NOTHROW(make_coefficients(make_zero_map(), make_zero_map()));
  // Drift restricted to the half line with a whole-line diffusion would let
  // the state escape the drift's domain.
  CHECK_THROWS_AS(make_coefficients(make_cev(1.0, 1.0), make_identity_map()),
                  DomainError);
}

TEST_CASE("drift helpers") {
  auto mr = make_mean_revert_drift(2.0, 1.5);
  CHECK(mr.psi(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mr.psi(0.0, 1.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mr.dpsi_dy(0.0, 7.0) == doctest::Approx(-2.0).epsilon(1e-12));
  auto pr = make_proportional_drift(0.3);
  CHECK(pr.psi(0.0, 2.0) == doctest::Approx(0.6).epsilon(1e-12));
  auto cd = make_const_drift(0.25);
  CHECK(cd.psi(5.0, -17.0) == 0.25);
  CHECK(cd.dpsi_dy(0.0, 0.0) == 0.0);
}
