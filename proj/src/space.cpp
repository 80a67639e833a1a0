#include "fwdcurve/space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fwdcurve {

SpaceConfig::SpaceConfig(double c, double x_max, int n)
    : c_(c), x_max_(x_max), dx_(x_max / (n - 1)), n_(n) {
  w_bar_ = 1.0 / std::sqrt(c);
  k_delta_ = std::sqrt(2.0 * std::max(1.0, w_bar_ * w_bar_));
  k_mult_ = std::sqrt(5.0 + 4.0 * w_bar_ * w_bar_);
  nodes_.resize(static_cast<std::size_t>(n));
  weights_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes_[i] = i * dx_;
    weights_[i] = std::exp(c * nodes_[i]);
  }
}

std::shared_ptr<const SpaceConfig> SpaceConfig::make(double weight_param,
                                                     double x_max,
                                                     int n_nodes) {
  if (!(weight_param > 0.0))
    throw DomainError("SpaceConfig: weight_param must be > 0");
  if (!(x_max > 0.0)) throw DomainError("SpaceConfig: x_max must be > 0");
  if (n_nodes < 3) throw DomainError("SpaceConfig: need at least 3 nodes");
  return std::shared_ptr<const SpaceConfig>(
      new SpaceConfig(weight_param, x_max, n_nodes));
}

double SpaceConfig::default_x_max(double weight_param, double tol) {
  if (!(weight_param > 0.0) || !(tol > 0.0) || !(tol < 1.0))
    throw DomainError("default_x_max: invalid parameters");
  return -std::log(tol) / weight_param;
}

bool SpaceConfig::is_node_multiple(double dt) const {
  const double p = dt / dx_;
  return std::abs(p - std::round(p)) <= kGridSnapTol * std::max(1.0, p);
}

CurveGrid make_curve(SpaceConfigPtr config, std::vector<double> values,
                     double tail) {
  if (!config) throw DomainError("make_curve: null config");
  if (static_cast<int>(values.size()) != config->n_nodes())
    throw DomainError("make_curve: value count does not match grid");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("make_curve: non-finite node");
  if (!std::isfinite(tail)) throw DomainError("make_curve: non-finite tail");
  return CurveGrid{std::move(config), std::move(values), tail};
}

CurveGrid make_flat_curve(SpaceConfigPtr config, double level) {
  return make_curve(
      config,
      std::vector<double>(static_cast<std::size_t>(config->n_nodes()), level),
      level);
}

void ensure_same_config(const CurveGrid& f, const CurveGrid& g,
                        const char* where) {
  if (!f.config || !g.config)
    throw ConfigMismatchError(std::string(where) + ": curve without config");
  if (f.config.get() == g.config.get()) return;
  if (!f.config->same_grid(*g.config))
    throw ConfigMismatchError(std::string(where) +
                              ": curves live on different grids");
}

std::vector<double> weak_derivative(const CurveGrid& f) {
  const int n = f.config->n_nodes();
  const double dx = f.config->spacing();
  std::vector<double> d(static_cast<std::size_t>(n));
  d[0] = (f.values[1] - f.values[0]) / dx;
  for (int i = 1; i + 1 < n; ++i)
    d[i] = (f.values[i + 1] - f.values[i - 1]) / (2.0 * dx);
  d[n - 1] = (f.values[n - 1] - f.values[n - 2]) / dx;
  return d;
}

double inner_product(const CurveGrid& f, const CurveGrid& g) {
  ensure_same_config(f, g, "inner_product");
  const SpaceConfig& cfg = *f.config;
  const int n = cfg.n_nodes();
  const auto df = weak_derivative(f);
  const auto dg = weak_derivative(g);
  const auto& w = cfg.weights();
  double acc = 0.5 * (df[0] * dg[0] * w[0] +
                      df[n - 1] * dg[n - 1] * w[n - 1]);
  for (int i = 1; i + 1 < n; ++i) acc += df[i] * dg[i] * w[i];
  return f.values[0] * g.values[0] + acc * cfg.spacing();
}

double norm(const CurveGrid& f) { return std::sqrt(inner_product(f, f)); }

namespace {

// Evaluation in grid coordinates p = x / spacing, shared by delta_eval and
// shift so both snap identically.
double eval_at_position(const CurveGrid& f, double p) {
  const int n = f.config->n_nodes();
  const double last = double(n - 1);
  if (p > last + kGridSnapTol) return f.tail;
  if (p < 0.0) p = 0.0;
  if (p > last) p = last;
  const double r = std::round(p);
  if (std::abs(p - r) <= kGridSnapTol)
    return f.values[static_cast<std::size_t>(r)];
  const int i = static_cast<int>(p);
  const double frac = p - i;
  return f.values[i] * (1.0 - frac) + f.values[i + 1] * frac;
}

}  // namespace

double delta_eval(const CurveGrid& f, double x) {
  if (!(x >= 0.0)) {
    std::ostringstream msg;
    msg << "delta_eval: x must be >= 0, got " << x;
    throw DomainError(msg.str());
  }
  return eval_at_position(f, x / f.config->spacing());
}

CurveGrid delta_dual(const SpaceConfigPtr& config, double c_val, double x) {
  if (!config) throw DomainError("delta_dual: null config");
  if (!(x >= 0.0)) throw DomainError("delta_dual: x must be >= 0");
  const double c = config->weight_param();
  auto anti = [c](double u) { return (1.0 - std::exp(-c * u)) / c; };
  CurveGrid out = make_curve_from(
      config,
      [&](double y) { return c_val * (1.0 + anti(std::min(x, y))); },
      c_val * (1.0 + anti(x)));
  return out;
}

double delta_dual_norm(const SpaceConfig& config, double c_val, double x) {
  const double c = config.weight_param();
  return std::abs(c_val) *
         std::sqrt(1.0 + (1.0 - std::exp(-c * x)) / c);
}

CurveGrid shift(const CurveGrid& f, double dt) {
  if (!(dt >= 0.0)) throw DomainError("shift: dt must be >= 0");
  const int n = f.config->n_nodes();
  const double s = dt / f.config->spacing();
  CurveGrid out{f.config, std::vector<double>(static_cast<std::size_t>(n)),
                f.tail};
  for (int i = 0; i < n; ++i) out.values[i] = eval_at_position(f, i + s);
  return out;
}

Cone cone_membership(const CurveGrid& f) {
  double mn = f.values[0], mx = f.values[0];
  for (double v : f.values) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (mn > 0.0 && f.tail > 0.0) return Cone::h_greater;
  if (mn > 0.0 && f.tail >= 0.0) return Cone::h_plus_strict;
  if (mn >= 0.0 && f.tail >= 0.0) return Cone::h_plus;
  if (mx < 0.0 && f.tail < 0.0) return Cone::h_less;
  return Cone::none;
}

const char* cone_name(Cone c) {
  switch (c) {
    case Cone::h_greater: return "strictly_positive_with_positive_tail";
    case Cone::h_plus_strict: return "strictly_positive_nodes";
    case Cone::h_plus: return "nonnegative";
    case Cone::h_less: return "strictly_negative_with_negative_tail";
    case Cone::none: return "none";
  }
  return "none";
}

}  // namespace fwdcurve
