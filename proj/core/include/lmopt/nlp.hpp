#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "lmopt/scenario.hpp"

namespace lmopt {

enum class ConstraintKind { Epigraph, Ball, Separation, Fov };

/// Smooth inequality form of the worst-case placement problem. The decision
/// vector is [z_1 .. z_M, t] (landmark coordinates then the epigraph slack),
/// with per-setpoint heading angles inserted before t in FOV mode:
/// [z_1 .. z_M (2 coords each), phi_1 .. phi_N, t].
///
/// All constraints are written as c_k(x) >= 0:
///   epigraph    t - tr(J^-1(x_i; z)) >= 0          (N)
///   ball        r_max^2 - |z_j|^2 >= 0             (M)
///   separation  |z_j - x_i|^2 - r_min^2 >= 0       (N*M)
///   fov         n_i . d_ij - cos(a/2) sqrt(|d_ij|^2 + delta^2) >= 0   (N*M)
class NlpInstance {
 public:
  int dimension() const { return dimension_; }
  int num_constraints() const { return num_constraints_; }
  int t_index() const { return dimension_ - 1; }
  bool planar() const { return scenario_.planar(); }
  int coords_per_landmark() const { return planar() ? 2 : 3; }
  int heading_index(int i) const { return coords_per_landmark() * scenario_.budget + i; }
  const Scenario& scenario() const { return scenario_; }

  ConstraintKind constraint_kind(int k) const;

  double objective(const Eigen::VectorXd& x) const { return x[t_index()]; }
  Eigen::VectorXd objective_gradient() const;

  double constraint_value(int k, const Eigen::VectorXd& x) const;
  Eigen::VectorXd constraint_gradient(int k, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd constraint_hessian(int k, const Eigen::VectorXd& x) const;

  /// Log-barrier value/gradient/Hessian at x for parameter mu, assembled in
  /// one pass (per-setpoint cost bundles are shared across the epigraph
  /// terms). Returns false when x is not strictly interior; outputs are then
  /// unspecified except residuals.
  bool barrier(const Eigen::VectorXd& x, double mu, double* value, Eigen::VectorXd* grad,
               Eigen::MatrixXd* hess, Eigen::VectorXd* residuals = nullptr) const;

  /// Smallest constraint residual at x (negative when infeasible).
  double min_residual(const Eigen::VectorXd& x) const;

  std::vector<Vec3> landmarks_from(const Eigen::VectorXd& x) const;
  std::vector<double> headings_from(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pack(std::span<const Vec3> landmarks, std::span<const double> headings,
                       double t) const;

 private:
  friend NlpInstance build_nlp(const Scenario&);
  explicit NlpInstance(Scenario sc);

  /// Cost bundle of setpoint i mapped into decision coordinates.
  void epigraph_terms(int i, std::span<const Vec3> landmarks, double* value,
                      Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const;

  Scenario scenario_;
  int dimension_ = 0;
  int num_constraints_ = 0;
};

/// Validates the scenario (including the feasible-set sampling check) and
/// assembles the instance.
NlpInstance build_nlp(const Scenario& scenario);

/// Cone residual for one heading/landmark pair, evaluated on the horizontal
/// projection of z - x. Nonnegative means the landmark is visible. Larger
/// delta shrinks the admissible cone.
double fov_residual(double n_angle, const Vec3& x, const Vec3& z, double alpha, double delta);

/// Scores a landmark set against every setpoint: per-setpoint smoothed costs,
/// their maximum, constraint feasibility, and (in FOV mode) one heading per
/// setpoint found by angular-interval intersection.
Placement evaluate_placement(const Scenario& scenario, std::span<const Vec3> landmarks);

}  // namespace lmopt
