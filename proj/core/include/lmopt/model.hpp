#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "lmopt/errors.hpp"
#include "lmopt/geometry.hpp"

namespace lmopt {

/// Bearing sensing model: isotropic measurement noise, a Gaussian position
/// prior in information form, and the smoothing length applied to the bearing
/// denominator.
struct MeasurementModel {
  double sigma_m = 0.1;                           // bearing noise std
  SymMat3 prior_info = SymMat3::identity(1.0);    // inverse prior covariance, 1/m^2
  double delta = 0.0;                             // smoothing length, m

  static MeasurementModel isotropic(double prior_variance, double sigma_m, double delta = 0.0) {
    MeasurementModel m;
    m.sigma_m = sigma_m;
    m.prior_info = SymMat3::identity(1.0 / prior_variance);
    m.delta = delta;
    return m;
  }

  /// Throws std::invalid_argument when any invariant fails.
  void validate() const;
};

struct InfoMatrix {
  SymMat3 j;
  bool is_pd = false;
};

/// Value, gradient and Hessian of the trace-of-covariance cost with respect
/// to the stacked landmark coordinates (length 3M).
struct DerivBundle {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// Direction to z seen from x with the smoothed denominator; unit norm at
/// delta = 0, strictly shorter otherwise.
Vec3 smoothed_bearing(const Vec3& x, const Vec3& z, double delta);

/// Information contribution of one bearing: the Gram matrix of the bearing
/// Jacobian with respect to the observer position. Eigenstructure:
/// delta^4/(d^2+delta^2)^3 along the bearing, 1/(d^2+delta^2) across it.
SymMat3 pair_info(const Vec3& x, const Vec3& z, double delta);

/// Prior information plus sigma_m^-2-weighted pair contributions.
InfoMatrix total_info(const Vec3& x, std::span<const Vec3> landmarks, const MeasurementModel& model);

/// tr(J^-1): total position uncertainty at x given the landmark set.
double localization_cost(const Vec3& x, std::span<const Vec3> landmarks, const MeasurementModel& model);

/// Exact gradient and Hessian of localization_cost in the landmark
/// coordinates. Cross-landmark Hessian blocks contain only the
/// curvature-product term since d2J/dz_j dz_k vanishes for j != k.
DerivBundle cost_derivatives(const Vec3& x, std::span<const Vec3> landmarks, const MeasurementModel& model);

namespace detail {

/// First and (optionally) second derivatives of pair_info with respect to the
/// displacement r = z - x. Second-order entries use upper-triangular order
/// (0,0),(0,1),(0,2),(1,1),(1,2),(2,2).
struct PairInfoDerivs {
  SymMat3 s;
  std::array<SymMat3, 3> ds;
  std::array<SymMat3, 6> d2s;
};

PairInfoDerivs pair_info_derivs(const Vec3& x, const Vec3& z, double delta, bool second_order);

inline int tri_index(int k, int l) {
  if (k > l) std::swap(k, l);
  static constexpr int base[3] = {0, 3, 5};
  return base[k] + (l - k);
}

}  // namespace detail

}  // namespace lmopt
