#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fwdcurve/errors.hpp"

namespace fwdcurve {

/// Discretization of a weighted Sobolev space of forward curves on [0, inf).
///
/// A curve f is represented by node values on a uniform grid over [0, x_max]
/// plus an explicit constant tail value for x > x_max.  The inner product is
///
///     <f, g> = f(0) g(0) + integral_0^x_max f'(x) g'(x) w(x) dx,
///
/// with the exponential weight w(x) = exp(c x), c > 0.  Derivatives are
/// finite differences (central in the interior, one-sided at the ends) and
/// the integral is a composite trapezoid rule, so all identities below hold
/// up to a small grid slack (see kGridSlack).
///
/// Two derived constants govern the operator bounds used throughout:
///   k_delta: point evaluation satisfies |f(x)| <= k_delta * norm(f),
///   k_mult:  pointwise products satisfy norm(h f) <= k_mult norm(h) norm(f).
/// For c = 1 these are sqrt(2) and 3.
class SpaceConfig {
 public:
  /// Validates parameters; throws DomainError on c <= 0, x_max <= 0 or
  /// fewer than 3 nodes.
  static std::shared_ptr<const SpaceConfig> make(double weight_param,
                                                 double x_max, int n_nodes);

  /// Cut-off such that the discarded mass of 1/w beyond x_max is below tol:
  /// x_max = -log(tol) / c.
  static double default_x_max(double weight_param, double tol = 1e-6);

  double weight_param() const { return c_; }
  double x_max() const { return x_max_; }
  int n_nodes() const { return n_; }
  double spacing() const { return dx_; }
  double node(int i) const { return nodes_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// w_bar = (integral_0^inf 1/w)^(1/2) = c^(-1/2).
  double w_bar() const { return w_bar_; }
  /// Point-evaluation constant sqrt(2 max(1, w_bar^2)).
  double k_delta() const { return k_delta_; }
  /// Multiplication constant sqrt(5 + 4 w_bar^2).
  double k_mult() const { return k_mult_; }

  /// True when dt is an integer multiple of the grid spacing (within 1e-9
  /// relative); transport by such dt is node-exact.
  bool is_node_multiple(double dt) const;

  bool same_grid(const SpaceConfig& other) const {
    return c_ == other.c_ && x_max_ == other.x_max_ && n_ == other.n_;
  }

 private:
  SpaceConfig(double c, double x_max, int n);
  double c_, x_max_, dx_;
  int n_;
  double w_bar_, k_delta_, k_mult_;
  std::vector<double> nodes_;    // nodes_[i] = i * dx_
  std::vector<double> weights_;  // w(nodes_[i])
};

using SpaceConfigPtr = std::shared_ptr<const SpaceConfig>;

/// Relative slack absorbed by grid discretization in the operator-bound
/// guarantees (point evaluation, multiplication).
inline constexpr double kGridSlack = 1e-2;

/// Snap tolerance for locating grid positions: offsets within this fraction
/// of a spacing from a node evaluate at the node exactly, which makes
/// transport by node multiples exact and composable.
inline constexpr double kGridSnapTol = 1e-9;

/// A curve: node values plus constant tail.  Treat as immutable after
/// construction; every operation returns a fresh curve.
struct CurveGrid {
  SpaceConfigPtr config;
  std::vector<double> values;
  double tail = 0.0;
};

/// Builds a curve, checking size and finiteness.
CurveGrid make_curve(SpaceConfigPtr config, std::vector<double> values,
                     double tail);

/// Convenience: constant curve (value at every node and in the tail).
CurveGrid make_flat_curve(SpaceConfigPtr config, double level);

/// Applies f(x) at every node; tail must be supplied by the caller.
template <typename F>
CurveGrid make_curve_from(const SpaceConfigPtr& config, F&& f, double tail) {
  std::vector<double> v(static_cast<std::size_t>(config->n_nodes()));
  for (int i = 0; i < config->n_nodes(); ++i) v[i] = f(config->node(i));
  CurveGrid out{config, std::move(v), tail};
  return out;
}

/// Throws ConfigMismatchError unless both curves share a grid.
void ensure_same_config(const CurveGrid& f, const CurveGrid& g,
                        const char* where);

/// Finite-difference weak derivative at the nodes: central differences in
/// the interior, one-sided at both ends.
std::vector<double> weak_derivative(const CurveGrid& f);

/// <f, g> = f(0) g(0) + trapezoid( f' g' w ).
double inner_product(const CurveGrid& f, const CurveGrid& g);

double norm(const CurveGrid& f);

/// Point evaluation by linear interpolation; positions past x_max return the
/// tail, positions within kGridSnapTol of a node return the node value
/// exactly.  Guaranteed |delta_eval(f, x)| <= k_delta * norm(f) * (1 +
/// kGridSlack) for curves resolved by the grid.
double delta_eval(const CurveGrid& f, double x);

/// Riesz representer of scaled point evaluation: the curve
///     y -> c_val * (1 + integral_0^min(x,y) 1/w du),
/// which satisfies <delta_dual(c_val, x), f> = c_val * f(x) and has norm
/// |c_val| * (1 + integral_0^x 1/w)^(1/2).
CurveGrid delta_dual(const SpaceConfigPtr& config, double c_val, double x);

/// Closed form of norm(delta_dual(c_val, x)) for the exponential weight.
double delta_dual_norm(const SpaceConfig& config, double c_val, double x);

/// Left transport: shift(f, dt)(x) = f(x + dt).  Node-exact (and exactly
/// composable) when dt is a node multiple; linear interpolation otherwise.
CurveGrid shift(const CurveGrid& f, double dt);

/// Sign cones, most specific first.  h_greater additionally requires a
/// strictly positive tail, which is what multiplicative inversion and the
/// logarithmic transform need.
enum class Cone {
  h_greater,      // every node > 0 and tail > 0
  h_plus_strict,  // every node > 0, tail >= 0
  h_plus,         // every node >= 0 and tail >= 0
  h_less,         // every node < 0 and tail < 0
  none
};

Cone cone_membership(const CurveGrid& f);

const char* cone_name(Cone c);

}  // namespace fwdcurve
