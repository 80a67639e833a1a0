#pragma once

#include <memory>
#include <vector>

#include "fwdcurve/rng.hpp"
#include "fwdcurve/space.hpp"

namespace fwdcurve {

/// Analytic shapes available as covariance eigenfunctions before
/// orthonormalization.
struct EigenShape {
  enum class Kind { constant, expsat, damped };
  Kind kind = Kind::constant;
  double rate = 1.0;   // decay rate a in exp(-a x)
  double freq = 1.0;   // oscillation frequency (damped only)
  double scale = 1.0;  // overall amplitude of the raw shape

  /// constant: scale;  expsat: scale * (1 - exp(-rate x)), tail scale;
  /// damped:   scale * exp(-rate x) * sin(freq x), tail 0.
  CurveGrid realize(const SpaceConfigPtr& config) const;
};

struct EigenPairSpec {
  double lambda = 0.0;
  EigenShape shape;
};

/// Finite-rank covariance of the driving noise: Q f = sum_j lambda_j
/// <f, e_j> e_j with e_j orthonormal under the space inner product.  The
/// declared shapes are orthonormalized by modified Gram-Schmidt; the
/// residual max |<e_i, e_j> - delta_ij| is reported, values up to 1e-3 are
/// accepted (quadrature limits exactness).
class CovarianceOperator {
 public:
  static std::shared_ptr<const CovarianceOperator> make(
      const SpaceConfigPtr& config, const std::vector<EigenPairSpec>& pairs);

  const SpaceConfigPtr& config() const { return config_; }
  int rank() const { return static_cast<int>(lambdas_.size()); }
  double lambda(int j) const { return lambdas_[j]; }
  const CurveGrid& eigenfunction(int j) const { return basis_[j]; }
  double gram_residual() const { return gram_residual_; }
  double trace() const;

 private:
  SpaceConfigPtr config_;
  std::vector<double> lambdas_;
  std::vector<CurveGrid> basis_;
  double gram_residual_ = 0.0;
};

using CovariancePtr = std::shared_ptr<const CovarianceOperator>;

/// One Gaussian increment over a step of length dt:
///     dW = sum_j sqrt(lambda_j dt) Z_j e_j,
/// with Z_j = stream.normal(j).  Identical streams produce identical
/// increments, which is the reproducibility contract of the whole library.
CurveGrid sample_increment(const CovarianceOperator& q, double dt,
                           const NoiseStream& stream);

/// Point-wise variance profile x -> sum_j lambda_j e_j(x)^2 (the diagonal
/// of the covariance in state space).
CurveGrid variance_kernel(const CovarianceOperator& q);

/// Instantaneous volatility factor at calendar time t for delivery T:
///     c(t, T) = ( sum_j lambda_j e_j(T - t)^2 )^(1/2),  requires t <= T.
/// Evaluated directly through the eigenfunctions so it is consistent with
/// sample_increment at the same position.
double c_coeff(const CovarianceOperator& q, double t, double T);

/// Instantaneous correlation of the noise between deliveries T1 and T2 at
/// time t.  Throws DegenerateError when either volatility factor vanishes.
double correlation(const CovarianceOperator& q, double t, double T1,
                   double T2);

}  // namespace fwdcurve
