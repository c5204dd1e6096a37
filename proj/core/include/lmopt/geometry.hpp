#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace lmopt {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Symmetric 3x3 matrix stored as its six independent entries, so symmetry
/// holds by construction rather than by runtime checks.
struct SymMat3 {
  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

  static SymMat3 zero() { return {}; }

  static SymMat3 identity(double s = 1.0) {
    SymMat3 m;
    m.xx = m.yy = m.zz = s;
    return m;
  }

  static SymMat3 diagonal(double a, double b, double c) {
    SymMat3 m;
    m.xx = a;
    m.yy = b;
    m.zz = c;
    return m;
  }

  /// scale * v v^T
  static SymMat3 outer(const Vec3& v, double scale = 1.0) {
    SymMat3 m;
    m.xx = scale * v.x() * v.x();
    m.xy = scale * v.x() * v.y();
    m.xz = scale * v.x() * v.z();
    m.yy = scale * v.y() * v.y();
    m.yz = scale * v.y() * v.z();
    m.zz = scale * v.z() * v.z();
    return m;
  }

  /// scale * (a b^T + b a^T), symmetric by construction.
  static SymMat3 symmetric_outer(const Vec3& a, const Vec3& b, double scale = 1.0) {
    SymMat3 m;
    m.xx = scale * 2.0 * a.x() * b.x();
    m.xy = scale * (a.x() * b.y() + a.y() * b.x());
    m.xz = scale * (a.x() * b.z() + a.z() * b.x());
    m.yy = scale * 2.0 * a.y() * b.y();
    m.yz = scale * (a.y() * b.z() + a.z() * b.y());
    m.zz = scale * 2.0 * a.z() * b.z();
    return m;
  }

  /// Takes the symmetric part (m + m^T)/2 of a dense matrix.
  static SymMat3 from_dense(const Eigen::Matrix3d& m) {
    SymMat3 s;
    s.xx = m(0, 0);
    s.yy = m(1, 1);
    s.zz = m(2, 2);
    s.xy = 0.5 * (m(0, 1) + m(1, 0));
    s.xz = 0.5 * (m(0, 2) + m(2, 0));
    s.yz = 0.5 * (m(1, 2) + m(2, 1));
    return s;
  }

  Eigen::Matrix3d dense() const {
    Eigen::Matrix3d m;
    m << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    return m;
  }

  double trace() const { return xx + yy + zz; }

  double determinant() const {
    return xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) + xz * (xy * yz - yy * xz);
  }

  /// Closed-form inverse via the adjugate; the caller guarantees invertibility.
  SymMat3 inverse() const {
    const double det = determinant();
    const double inv_det = 1.0 / det;
    SymMat3 r;
    r.xx = (yy * zz - yz * yz) * inv_det;
    r.xy = (xz * yz - xy * zz) * inv_det;
    r.xz = (xy * yz - xz * yy) * inv_det;
    r.yy = (xx * zz - xz * xz) * inv_det;
    r.yz = (xy * xz - xx * yz) * inv_det;
    r.zz = (xx * yy - xy * xy) * inv_det;
    return r;
  }

  Vec3 operator*(const Vec3& v) const {
    return {xx * v.x() + xy * v.y() + xz * v.z(),
            xy * v.x() + yy * v.y() + yz * v.z(),
            xz * v.x() + yz * v.y() + zz * v.z()};
  }

  SymMat3& operator+=(const SymMat3& o) {
    xx += o.xx;
    xy += o.xy;
    xz += o.xz;
    yy += o.yy;
    yz += o.yz;
    zz += o.zz;
    return *this;
  }

  SymMat3& operator*=(double s) {
    xx *= s;
    xy *= s;
    xz *= s;
    yy *= s;
    yz *= s;
    zz *= s;
    return *this;
  }

  friend SymMat3 operator+(SymMat3 a, const SymMat3& b) { return a += b; }

  friend SymMat3 operator-(SymMat3 a, const SymMat3& b) {
    a.xx -= b.xx;
    a.xy -= b.xy;
    a.xz -= b.xz;
    a.yy -= b.yy;
    a.yz -= b.yz;
    a.zz -= b.zz;
    return a;
  }

  friend SymMat3 operator*(double s, SymMat3 m) { return m *= s; }

  std::array<double, 3> eigenvalues_ascending() const;

  double min_eigenvalue() const { return eigenvalues_ascending()[0]; }

  /// Spectral norm (largest absolute eigenvalue).
  double spectral_norm() const {
    const auto ev = eigenvalues_ascending();
    return std::max(std::abs(ev[0]), std::abs(ev[2]));
  }

  bool is_positive_definite() const { return min_eigenvalue() > 0.0; }
};

/// tr(a b) for symmetric a, b.
inline double trace_product(const SymMat3& a, const SymMat3& b) {
  return a.xx * b.xx + a.yy * b.yy + a.zz * b.zz +
         2.0 * (a.xy * b.xy + a.xz * b.xz + a.yz * b.yz);
}

}  // namespace lmopt
