#include "lmopt/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmopt {

double fov_residual(double n_angle, const Vec3& x, const Vec3& z, double alpha, double delta) {
  const double dx = z.x() - x.x(), dy = z.y() - x.y();
  const double q = std::sqrt(dx * dx + dy * dy + delta * delta);
  return std::cos(n_angle) * dx + std::sin(n_angle) * dy - std::cos(alpha / 2.0) * q;
}

NlpInstance::NlpInstance(Scenario sc) : scenario_(std::move(sc)) {
  const int n = scenario_.num_setpoints();
  const int m = scenario_.budget;
  if (planar()) {
    dimension_ = 2 * m + n + 1;
    num_constraints_ = n + m + 2 * n * m;
  } else {
    dimension_ = 3 * m + 1;
    num_constraints_ = n + m + n * m;
  }
}

NlpInstance build_nlp(const Scenario& scenario) {
  scenario.validate();
  scenario.check_feasible_set();
  return NlpInstance(scenario);
}

ConstraintKind NlpInstance::constraint_kind(int k) const {
  const int n = scenario_.num_setpoints();
  const int m = scenario_.budget;
  if (k < n) return ConstraintKind::Epigraph;
  if (k < n + m) return ConstraintKind::Ball;
  if (k < n + m + n * m) return ConstraintKind::Separation;
  return ConstraintKind::Fov;
}

Eigen::VectorXd NlpInstance::objective_gradient() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension_);
  g[t_index()] = 1.0;
  return g;
}

std::vector<Vec3> NlpInstance::landmarks_from(const Eigen::VectorXd& x) const {
  const int m = scenario_.budget;
  std::vector<Vec3> z(m);
  if (planar()) {
    const double h = scenario_.landmark_height();
    for (int j = 0; j < m; ++j) z[j] = {x[2 * j], x[2 * j + 1], h};
  } else {
    for (int j = 0; j < m; ++j) z[j] = {x[3 * j], x[3 * j + 1], x[3 * j + 2]};
  }
  return z;
}

std::vector<double> NlpInstance::headings_from(const Eigen::VectorXd& x) const {
  if (!planar()) return {};
  const int n = scenario_.num_setpoints();
  std::vector<double> phi(n);
  for (int i = 0; i < n; ++i) phi[i] = x[heading_index(i)];
  return phi;
}

Eigen::VectorXd NlpInstance::pack(std::span<const Vec3> landmarks, std::span<const double> headings,
                                  double t) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dimension_);
  const int m = scenario_.budget;
  if (planar()) {
    for (int j = 0; j < m; ++j) {
      x[2 * j] = landmarks[j].x();
      x[2 * j + 1] = landmarks[j].y();
    }
    for (int i = 0; i < scenario_.num_setpoints(); ++i) x[heading_index(i)] = headings[i];
  } else {
    for (int j = 0; j < m; ++j) x.segment<3>(3 * j) = landmarks[j];
  }
  x[t_index()] = t;
  return x;
}

void NlpInstance::epigraph_terms(int i, std::span<const Vec3> landmarks, double* value,
                                 Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  const int m = scenario_.budget;
  const int cpl = coords_per_landmark();
  const MeasurementModel model = scenario_.model_for(i);
  if (!grad && !hess) {
    *value = localization_cost(scenario_.setpoints[i], landmarks, model);
    return;
  }
  const DerivBundle b = cost_derivatives(scenario_.setpoints[i], landmarks, model);
  if (value) *value = b.value;
  if (grad) {
    grad->setZero(dimension_);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < cpl; ++k) (*grad)[cpl * j + k] = b.grad[3 * j + k];
  }
  if (hess) {
    hess->setZero(dimension_, dimension_);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < cpl; ++k)
        for (int j2 = 0; j2 < m; ++j2)
          for (int k2 = 0; k2 < cpl; ++k2)
            (*hess)(cpl * j + k, cpl * j2 + k2) = b.hess(3 * j + k, 3 * j2 + k2);
  }
}

double NlpInstance::constraint_value(int k, const Eigen::VectorXd& x) const {
  const int n = scenario_.num_setpoints();
  const int m = scenario_.budget;
  const auto landmarks = landmarks_from(x);
  switch (constraint_kind(k)) {
    case ConstraintKind::Epigraph: {
      double cost;
      epigraph_terms(k, landmarks, &cost, nullptr, nullptr);
      return x[t_index()] - cost;
    }
    case ConstraintKind::Ball: {
      const int j = k - n;
      const double r2 = planar() ? landmarks[j].head<2>().squaredNorm() : landmarks[j].squaredNorm();
      return scenario_.r_max * scenario_.r_max - r2;
    }
    case ConstraintKind::Separation: {
      const int idx = k - n - m;
      const int i = idx / m, j = idx % m;
      return (landmarks[j] - scenario_.setpoints[i]).squaredNorm() - scenario_.r_min * scenario_.r_min;
    }
    case ConstraintKind::Fov: {
      const int idx = k - n - m - n * m;
      const int i = idx / m, j = idx % m;
      return fov_residual(x[heading_index(i)], scenario_.setpoints[i], landmarks[j],
                          scenario_.fov->alpha, scenario_.model.delta);
    }
  }
  return 0.0;
}

Eigen::VectorXd NlpInstance::constraint_gradient(int k, const Eigen::VectorXd& x) const {
  const int n = scenario_.num_setpoints();
  const int m = scenario_.budget;
  const int cpl = coords_per_landmark();
  const auto landmarks = landmarks_from(x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension_);
  switch (constraint_kind(k)) {
    case ConstraintKind::Epigraph: {
      double cost;
      epigraph_terms(k, landmarks, &cost, &g, nullptr);
      g = -g;
      g[t_index()] = 1.0;
      break;
    }
    case ConstraintKind::Ball: {
      const int j = k - n;
      for (int c = 0; c < cpl; ++c) g[cpl * j + c] = -2.0 * landmarks[j][c];
      break;
    }
    case ConstraintKind::Separation: {
      const int idx = k - n - m;
      const int i = idx / m, j = idx % m;
      const Vec3 d = landmarks[j] - scenario_.setpoints[i];
      for (int c = 0; c < cpl; ++c) g[cpl * j + c] = 2.0 * d[c];
      break;
    }
    case ConstraintKind::Fov: {
      const int idx = k - n - m - n * m;
      const int i = idx / m, j = idx % m;
      const double phi = x[heading_index(i)];
      const double dx = landmarks[j].x() - scenario_.setpoints[i].x();
      const double dy = landmarks[j].y() - scenario_.setpoints[i].y();
      const double ca = std::cos(scenario_.fov->alpha / 2.0);
      const double delta = scenario_.model.delta;
      const double q = std::sqrt(dx * dx + dy * dy + delta * delta);
      g[heading_index(i)] = -std::sin(phi) * dx + std::cos(phi) * dy;
      g[cpl * j] = std::cos(phi) - ca * dx / q;
      g[cpl * j + 1] = std::sin(phi) - ca * dy / q;
      break;
    }
  }
  return g;
}

Eigen::MatrixXd NlpInstance::constraint_hessian(int k, const Eigen::VectorXd& x) const {
  const int n = scenario_.num_setpoints();
  const int m = scenario_.budget;
  const int cpl = coords_per_landmark();
  const auto landmarks = landmarks_from(x);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dimension_, dimension_);
  switch (constraint_kind(k)) {
    case ConstraintKind::Epigraph: {
      double cost;
      epigraph_terms(k, landmarks, nullptr, nullptr, &h);
      h = -h;
      break;
    }
    case ConstraintKind::Ball: {
      const int j = k - n;
      for (int c = 0; c < cpl; ++c) h(cpl * j + c, cpl * j + c) = -2.0;
      break;
    }
    case ConstraintKind::Separation: {
      const int idx = k - n - m;
      const int j = idx % m;
      for (int c = 0; c < cpl; ++c) h(cpl * j + c, cpl * j + c) = 2.0;
      break;
    }
    case ConstraintKind::Fov: {
      const int idx = k - n - m - n * m;
      const int i = idx / m, j = idx % m;
      const int pi = heading_index(i);
      const double phi = x[pi];
      const double dx = landmarks[j].x() - scenario_.setpoints[i].x();
      const double dy = landmarks[j].y() - scenario_.setpoints[i].y();
      const double ca = std::cos(scenario_.fov->alpha / 2.0);
      const double delta = scenario_.model.delta;
      const double q2 = dx * dx + dy * dy + delta * delta;
      const double q = std::sqrt(q2), q3 = q2 * q;
      // d2/dphi2, d2/dphi d(u,v), d2/d(u,v)2
      h(pi, pi) = -(std::cos(phi) * dx + std::sin(phi) * dy);
      h(pi, cpl * j) = h(cpl * j, pi) = -std::sin(phi);
      h(pi, cpl * j + 1) = h(cpl * j + 1, pi) = std::cos(phi);
      h(cpl * j, cpl * j) = -ca * (1.0 / q - dx * dx / q3);
      h(cpl * j + 1, cpl * j + 1) = -ca * (1.0 / q - dy * dy / q3);
      h(cpl * j, cpl * j + 1) = h(cpl * j + 1, cpl * j) = ca * dx * dy / q3;
      break;
    }
  }
  return h;
}

bool NlpInstance::barrier(const Eigen::VectorXd& x, double mu, double* value, Eigen::VectorXd* grad,
                          Eigen::MatrixXd* hess, Eigen::VectorXd* residuals) const {
  const int n = scenario_.num_setpoints();
  const int m = scenario_.budget;
  const int cpl = coords_per_landmark();
  const int dim = dimension_;
  const double t = x[t_index()];
  const auto landmarks = landmarks_from(x);

  Eigen::VectorXd c(num_constraints_);
  bool interior = true;

  // Epigraph residuals need the cost bundles; compute them once and reuse for
  // the gradient/Hessian accumulation below.
  std::vector<DerivBundle> bundles;
  const bool need_derivs = grad != nullptr || hess != nullptr;
  bundles.reserve(n);
  for (int i = 0; i < n; ++i) {
    const MeasurementModel model = scenario_.model_for(i);
    if (need_derivs) {
      bundles.push_back(cost_derivatives(scenario_.setpoints[i], landmarks, model));
      c[i] = t - bundles.back().value;
    } else {
      c[i] = t - localization_cost(scenario_.setpoints[i], landmarks, model);
    }
  }
  for (int j = 0; j < m; ++j) {
    const double r2 = planar() ? landmarks[j].head<2>().squaredNorm() : landmarks[j].squaredNorm();
    c[n + j] = scenario_.r_max * scenario_.r_max - r2;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      c[n + m + i * m + j] =
          (landmarks[j] - scenario_.setpoints[i]).squaredNorm() - scenario_.r_min * scenario_.r_min;
  if (planar()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        c[n + m + n * m + i * m + j] =
            fov_residual(x[heading_index(i)], scenario_.setpoints[i], landmarks[j],
                         scenario_.fov->alpha, scenario_.model.delta);
  }
  if (residuals) *residuals = c;
  for (int k = 0; k < num_constraints_; ++k)
    if (!(c[k] > 0.0)) interior = false;
  if (!interior) return false;

  if (value) {
    double v = t;
    for (int k = 0; k < num_constraints_; ++k) v -= mu * std::log(c[k]);
    *value = v;
  }
  if (!need_derivs) return true;

  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  g[t_index()] = 1.0;
  Eigen::MatrixXd h;
  if (hess) h = Eigen::MatrixXd::Zero(dim, dim);

  // Accumulates -mu*grad(c)/c and mu*[grad(c) grad(c)^T / c^2 - hess(c)/c].
  Eigen::VectorXd gc(dim);
  for (int k = 0; k < num_constraints_; ++k) {
    gc.setZero();
    const double ck = c[k];
    switch (constraint_kind(k)) {
      case ConstraintKind::Epigraph: {
        const DerivBundle& b = bundles[k];
        for (int j = 0; j < m; ++j)
          for (int cc = 0; cc < cpl; ++cc) gc[cpl * j + cc] = -b.grad[3 * j + cc];
        gc[t_index()] = 1.0;
        if (hess) {
          for (int j = 0; j < m; ++j)
            for (int cc = 0; cc < cpl; ++cc)
              for (int j2 = 0; j2 < m; ++j2)
                for (int cc2 = 0; cc2 < cpl; ++cc2)
                  h(cpl * j + cc, cpl * j2 + cc2) += mu * b.hess(3 * j + cc, 3 * j2 + cc2) / ck;
        }
        break;
      }
      case ConstraintKind::Ball: {
        const int j = k - n;
        for (int cc = 0; cc < cpl; ++cc) gc[cpl * j + cc] = -2.0 * landmarks[j][cc];
        if (hess)
          for (int cc = 0; cc < cpl; ++cc) h(cpl * j + cc, cpl * j + cc) += mu * 2.0 / ck;
        break;
      }
      case ConstraintKind::Separation: {
        const int idx = k - n - m;
        const int i = idx / m, j = idx % m;
        const Vec3 d = landmarks[j] - scenario_.setpoints[i];
        for (int cc = 0; cc < cpl; ++cc) gc[cpl * j + cc] = 2.0 * d[cc];
        if (hess)
          for (int cc = 0; cc < cpl; ++cc) h(cpl * j + cc, cpl * j + cc) += -mu * 2.0 / ck;
        break;
      }
      case ConstraintKind::Fov: {
        const int idx = k - n - m - n * m;
        const int i = idx / m, j = idx % m;
        const int pi = heading_index(i);
        const double phi = x[pi];
        const double dx = landmarks[j].x() - scenario_.setpoints[i].x();
        const double dy = landmarks[j].y() - scenario_.setpoints[i].y();
        const double ca = std::cos(scenario_.fov->alpha / 2.0);
        const double delta = scenario_.model.delta;
        const double q2 = dx * dx + dy * dy + delta * delta;
        const double q = std::sqrt(q2), q3 = q2 * q;
        gc[pi] = -std::sin(phi) * dx + std::cos(phi) * dy;
        gc[cpl * j] = std::cos(phi) - ca * dx / q;
        gc[cpl * j + 1] = std::sin(phi) - ca * dy / q;
        if (hess) {
          h(pi, pi) += -mu * (-(std::cos(phi) * dx + std::sin(phi) * dy)) / ck;
          h(pi, cpl * j) += -mu * (-std::sin(phi)) / ck;
          h(cpl * j, pi) += -mu * (-std::sin(phi)) / ck;
          h(pi, cpl * j + 1) += -mu * std::cos(phi) / ck;
          h(cpl * j + 1, pi) += -mu * std::cos(phi) / ck;
          h(cpl * j, cpl * j) += -mu * (-ca * (1.0 / q - dx * dx / q3)) / ck;
          h(cpl * j + 1, cpl * j + 1) += -mu * (-ca * (1.0 / q - dy * dy / q3)) / ck;
          h(cpl * j, cpl * j + 1) += -mu * (ca * dx * dy / q3) / ck;
          h(cpl * j + 1, cpl * j) += -mu * (ca * dx * dy / q3) / ck;
        }
        break;
      }
    }
    g -= (mu / ck) * gc;
    if (hess) h += (mu / (ck * ck)) * (gc * gc.transpose());
  }

  if (grad) *grad = g;
  if (hess) *hess = h;
  return true;
}

double NlpInstance::min_residual(const Eigen::VectorXd& x) const {
  Eigen::VectorXd c;
  barrier(x, 0.0, nullptr, nullptr, nullptr, &c);
  return c.minCoeff();
}

Placement evaluate_placement(const Scenario& scenario, std::span<const Vec3> landmarks) {
  if (static_cast<int>(landmarks.size()) != scenario.budget)
    throw std::invalid_argument("evaluate_placement: landmark count must equal the scenario budget");

  Placement p;
  p.landmarks.assign(landmarks.begin(), landmarks.end());
  const int n = scenario.num_setpoints();
  p.per_setpoint_cost.resize(n);
  double worst_violation = 0.0;

  for (int i = 0; i < n; ++i)
    p.per_setpoint_cost[i] =
        localization_cost(scenario.setpoints[i], landmarks, scenario.model_for(i));
  p.max_cost = *std::max_element(p.per_setpoint_cost.begin(), p.per_setpoint_cost.end());

  for (const Vec3& z : landmarks) {
    const double r2 = scenario.planar() ? z.head<2>().squaredNorm() : z.squaredNorm();
    worst_violation = std::max(worst_violation, r2 - scenario.r_max * scenario.r_max);
    for (const Vec3& x : scenario.setpoints)
      worst_violation =
          std::max(worst_violation, scenario.r_min * scenario.r_min - (z - x).squaredNorm());
  }

  if (scenario.fov) {
    p.headings.resize(n);
    for (int i = 0; i < n; ++i) {
      const auto [phi, res] = best_heading(scenario.setpoints[i], landmarks, scenario.fov->alpha,
                                           scenario.model.delta);
      p.headings[i] = {std::cos(phi), std::sin(phi)};
      if (std::isfinite(res)) worst_violation = std::max(worst_violation, -res);
    }
  }

  p.feasible = worst_violation <= 1e-6;
  return p;
}

}  // namespace lmopt
