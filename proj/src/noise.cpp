#include "fwdcurve/noise.hpp"

#include <cmath>
#include <sstream>

namespace fwdcurve {

CurveGrid EigenShape::realize(const SpaceConfigPtr& config) const {
  switch (kind) {
    case Kind::constant:
      return make_flat_curve(config, scale);
    case Kind::expsat:
      return make_curve_from(
          config,
          [this](double x) { return scale * (1.0 - std::exp(-rate * x)); },
          scale);
    case Kind::damped:
      return make_curve_from(
          config,
          [this](double x) {
            return scale * std::exp(-rate * x) * std::sin(freq * x);
          },
          0.0);
  }
  throw DomainError("EigenShape: unknown kind");
}

std::shared_ptr<const CovarianceOperator> CovarianceOperator::make(
    const SpaceConfigPtr& config, const std::vector<EigenPairSpec>& pairs) {
  if (!config) throw DomainError("CovarianceOperator: null config");
  if (pairs.empty())
    throw DomainError("CovarianceOperator: need at least one eigenpair");
  auto q = std::make_shared<CovarianceOperator>();
  q->config_ = config;
  const int n = config->n_nodes();
  for (const auto& p : pairs) {
    if (!(p.lambda > 0.0))
      throw DomainError("CovarianceOperator: eigenvalues must be > 0");
    CurveGrid e = p.shape.realize(config);
    // Modified Gram-Schmidt against the accepted basis.
    for (const CurveGrid& b : q->basis_) {
      const double proj = inner_product(e, b);
      for (int i = 0; i < n; ++i) e.values[i] -= proj * b.values[i];
      e.tail -= proj * b.tail;
    }
    const double nrm = norm(e);
    if (!(nrm > 1e-10))
      throw DegenerateError(
          "CovarianceOperator: eigenfunction shapes are linearly dependent");
    for (double& v : e.values) v /= nrm;
    e.tail /= nrm;
    q->basis_.push_back(std::move(e));
    q->lambdas_.push_back(p.lambda);
  }
  double resid = 0.0;
  const int J = q->rank();
  for (int i = 0; i < J; ++i) {
    for (int j = i; j < J; ++j) {
      const double g = inner_product(q->basis_[i], q->basis_[j]);
      resid = std::max(resid, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  q->gram_residual_ = resid;
  return q;
}

double CovarianceOperator::trace() const {
  double s = 0.0;
  for (double l : lambdas_) s += l;
  return s;
}

CurveGrid sample_increment(const CovarianceOperator& q, double dt,
                           const NoiseStream& stream) {
  if (!(dt > 0.0)) throw DomainError("sample_increment: dt must be > 0");
  const int n = q.config()->n_nodes();
  CurveGrid out{q.config(), std::vector<double>(static_cast<std::size_t>(n), 0.0),
                0.0};
  for (int j = 0; j < q.rank(); ++j) {
    const double amp =
        std::sqrt(q.lambda(j) * dt) * stream.normal(static_cast<std::uint32_t>(j));
    const CurveGrid& e = q.eigenfunction(j);
    for (int i = 0; i < n; ++i) out.values[i] += amp * e.values[i];
    out.tail += amp * e.tail;
  }
  return out;
}

CurveGrid variance_kernel(const CovarianceOperator& q) {
  const int n = q.config()->n_nodes();
  CurveGrid out{q.config(), std::vector<double>(static_cast<std::size_t>(n), 0.0),
                0.0};
  for (int j = 0; j < q.rank(); ++j) {
    const CurveGrid& e = q.eigenfunction(j);
    for (int i = 0; i < n; ++i)
      out.values[i] += q.lambda(j) * e.values[i] * e.values[i];
    out.tail += q.lambda(j) * e.tail * e.tail;
  }
  return out;
}

double c_coeff(const CovarianceOperator& q, double t, double T) {
  if (!(t >= 0.0) || !(T >= t)) {
    std::ostringstream msg;
    msg << "c_coeff: need 0 <= t <= T, got t=" << t << " T=" << T;
    throw DomainError(msg.str());
  }
  const double x = T - t;
  double s = 0.0;
  for (int j = 0; j < q.rank(); ++j) {
    const double e = delta_eval(q.eigenfunction(j), x);
    s += q.lambda(j) * e * e;
  }
  return std::sqrt(s);
}

double correlation(const CovarianceOperator& q, double t, double T1,
                   double T2) {
  const double c1 = c_coeff(q, t, T1);
  const double c2 = c_coeff(q, t, T2);
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw DegenerateError(
        "correlation: instantaneous volatility vanishes at a requested "
        "delivery");
  double num = 0.0;
  for (int j = 0; j < q.rank(); ++j) {
    num += q.lambda(j) * delta_eval(q.eigenfunction(j), T1 - t) *
           delta_eval(q.eigenfunction(j), T2 - t);
  }
  const double rho = num / (c1 * c2);
  return std::min(1.0, std::max(-1.0, rho));
}

}  // namespace fwdcurve
