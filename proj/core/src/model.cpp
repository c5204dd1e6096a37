#include "lmopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lmopt {

namespace {

constexpr double kDegenerateRange = 1e-9;  // m

// Summation order fixed by landmark coordinates so a permuted list produces a
// bitwise-identical sum.
std::vector<int> canonical_order(std::span<const Vec3> landmarks) {
  std::vector<int> order(landmarks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec3& u = landmarks[a];
    const Vec3& v = landmarks[b];
    if (u.x() != v.x()) return u.x() < v.x();
    if (u.y() != v.y()) return u.y() < v.y();
    return u.z() < v.z();
  });
  return order;
}

}  // namespace

void MeasurementModel::validate() const {
  if (!(sigma_m > 0.0)) throw std::invalid_argument("measurement model: sigma_m must be > 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("measurement model: delta must be >= 0");
  if (!std::isfinite(sigma_m) || !std::isfinite(delta))
    throw std::invalid_argument("measurement model: non-finite parameter");
  if (!prior_info.is_positive_definite())
    throw std::invalid_argument("measurement model: prior information must be positive definite");
}

Vec3 smoothed_bearing(const Vec3& x, const Vec3& z, double delta) {
  const Vec3 r = z - x;
  const double d2 = r.squaredNorm();
  if (delta == 0.0 && d2 < kDegenerateRange * kDegenerateRange)
    throw DegenerateGeometryError("smoothed_bearing: z coincides with x at delta = 0", 0);
  return r / std::sqrt(d2 + delta * delta);
}

SymMat3 pair_info(const Vec3& x, const Vec3& z, double delta) {
  const Vec3 r = z - x;
  const double d2 = r.squaredNorm();
  if (delta == 0.0 && d2 < kDegenerateRange * kDegenerateRange)
    throw DegenerateGeometryError("pair_info: z coincides with x at delta = 0", 0);
  const double u = d2 + delta * delta;
  SymMat3 s = SymMat3::identity(1.0 / u);
  s += SymMat3::outer(r, -(d2 + 2.0 * delta * delta) / (u * u * u));
  return s;
}

InfoMatrix total_info(const Vec3& x, std::span<const Vec3> landmarks, const MeasurementModel& model) {
  const double w = 1.0 / (model.sigma_m * model.sigma_m);
  SymMat3 j = model.prior_info;
  for (int i : canonical_order(landmarks)) {
    try {
      j += w * pair_info(x, landmarks[i], model.delta);
    } catch (const DegenerateGeometryError&) {
      throw DegenerateGeometryError("total_info: degenerate landmark", i);
    }
  }
  // PSD contributions on top of a PD prior keep the sum PD.
  return {j, model.prior_info.is_positive_definite()};
}

double localization_cost(const Vec3& x, std::span<const Vec3> landmarks, const MeasurementModel& model) {
  return total_info(x, landmarks, model).j.inverse().trace();
}

namespace detail {

PairInfoDerivs pair_info_derivs(const Vec3& x, const Vec3& z, double delta, bool second_order) {
  const Vec3 r = z - x;
  const double d2 = r.squaredNorm();
  if (delta == 0.0 && d2 < kDegenerateRange * kDegenerateRange)
    throw DegenerateGeometryError("pair_info_derivs: z coincides with x at delta = 0", 0);

  // S(r) = a(rho) I + b(rho) r r^T with rho = |r|^2 and u = rho + delta^2.
  const double dd = delta * delta;
  const double u = d2 + dd;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  const double a = 1.0 / u;
  const double b = -(d2 + 2.0 * dd) / u3;
  const double ap = -1.0 / u2;
  const double bp = (2.0 * d2 + 5.0 * dd) / u4;

  PairInfoDerivs out;
  out.s = SymMat3::identity(a) + SymMat3::outer(r, b);

  const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();
  for (int k = 0; k < 3; ++k) {
    const Vec3 ek = eye.col(k);
    SymMat3 d = SymMat3::identity(2.0 * ap * r[k]);
    d += SymMat3::outer(r, 2.0 * bp * r[k]);
    d += SymMat3::symmetric_outer(ek, r, b);
    out.ds[k] = d;
  }

  if (second_order) {
    const double app = 2.0 / u3;
    const double bpp = -6.0 * (d2 + 3.0 * dd) / u5;
    for (int k = 0; k < 3; ++k) {
      for (int l = k; l < 3; ++l) {
        const double kron = (k == l) ? 1.0 : 0.0;
        const Vec3 ek = eye.col(k), el = eye.col(l);
        SymMat3 d2s = SymMat3::identity(4.0 * app * r[k] * r[l] + 2.0 * ap * kron);
        d2s += SymMat3::outer(r, 4.0 * bpp * r[k] * r[l] + 2.0 * bp * kron);
        d2s += SymMat3::symmetric_outer(el, r, 2.0 * bp * r[k]);
        d2s += SymMat3::symmetric_outer(ek, r, 2.0 * bp * r[l]);
        d2s += SymMat3::symmetric_outer(ek, el, b);
        out.d2s[tri_index(k, l)] = d2s;
      }
    }
  }
  return out;
}

}  // namespace detail

DerivBundle cost_derivatives(const Vec3& x, std::span<const Vec3> landmarks, const MeasurementModel& model) {
  const int m = static_cast<int>(landmarks.size());
  const int n = 3 * m;
  const double w = 1.0 / (model.sigma_m * model.sigma_m);

  std::vector<detail::PairInfoDerivs> pairs(m);
  for (int i = 0; i < m; ++i) {
    try {
      pairs[i] = detail::pair_info_derivs(x, landmarks[i], model.delta, true);
    } catch (const DegenerateGeometryError&) {
      throw DegenerateGeometryError("cost_derivatives: degenerate landmark", i);
    }
  }
  SymMat3 j = model.prior_info;
  for (int i : canonical_order(landmarks)) j += w * pairs[i].s;

  const SymMat3 jinv = j.inverse();
  const Eigen::Matrix3d jinv_d = jinv.dense();
  const SymMat3 jinv2 = SymMat3::from_dense(jinv_d * jinv_d);

  DerivBundle out;
  out.value = jinv.trace();
  out.grad = Eigen::VectorXd::Zero(n);
  out.hess = Eigen::MatrixXd::Zero(n, n);
  if (m == 0) return out;

  // dJ/dtheta per scalar coordinate, and K = J^-1 dJ J^-2 reused across the
  // Hessian row: hess_ij = 2 tr(K_i dJ_j) - tr(J^-2 d2J_ij).
  std::vector<SymMat3> dj(n);
  std::vector<Eigen::Matrix3d> kmat(n);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < 3; ++k) {
      const int idx = 3 * i + k;
      dj[idx] = w * pairs[i].ds[k];
      out.grad[idx] = -trace_product(jinv2, dj[idx]);
      kmat[idx] = jinv_d * dj[idx].dense() * jinv2.dense();
    }
  }

  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      double h = 2.0 * (kmat[p].transpose().cwiseProduct(dj[q].dense())).sum();
      if (p / 3 == q / 3) {
        const int i = p / 3;
        const SymMat3 d2 = w * pairs[i].d2s[detail::tri_index(p % 3, q % 3)];
        h -= trace_product(jinv2, d2);
      }
      out.hess(p, q) = h;
      out.hess(q, p) = h;
    }
  }
  return out;
}

}  // namespace lmopt
