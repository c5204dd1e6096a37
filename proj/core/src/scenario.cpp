#include "lmopt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmopt/nlp.hpp"

namespace lmopt {

std::vector<std::string> Scenario::validate() const {
  if (setpoints.empty()) throw InvalidScenarioError("scenario: needs at least one setpoint");
  if (budget < 0) throw InvalidScenarioError("scenario: negative landmark budget");
  if (!(r_min > 0.0) || !(r_min < r_max))
    throw InvalidScenarioError("scenario: requires 0 < r_min < r_max");
  model.validate();
  for (const Vec3& x : setpoints)
    if (!x.allFinite()) throw InvalidScenarioError("scenario: non-finite setpoint");
  if (!prior_overrides.empty() && prior_overrides.size() != setpoints.size())
    throw InvalidScenarioError("scenario: prior override count must match setpoints");
  for (const SymMat3& p : prior_overrides)
    if (!p.is_positive_definite())
      throw InvalidScenarioError("scenario: prior override must be positive definite");
  if (fov) {
    if (!(fov->alpha > 0.0) || !(fov->alpha < 2.0 * M_PI))
      throw InvalidScenarioError("scenario: fov alpha must lie in (0, 2*pi)");
    if (!fov->planar)
      throw InvalidScenarioError("scenario: fov mode requires planar landmarks");
  }

  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < setpoints.size(); ++i) {
    if (setpoints[i].norm() > r_max)
      warnings.push_back("setpoint " + std::to_string(i) + " lies outside the r_max ball");
  }
  return warnings;
}

bool Scenario::landmark_feasible(const Vec3& z, double slack) const {
  if (planar()) {
    if (z.head<2>().norm() > r_max - slack) return false;
  } else {
    if (z.norm() > r_max - slack) return false;
  }
  for (const Vec3& x : setpoints)
    if ((z - x).norm() < r_min + slack) return false;
  return true;
}

Vec3 Scenario::sample_feasible_landmark(RNG& rng, long max_attempts) const {
  for (long a = 0; a < max_attempts; ++a) {
    const Vec3 z = planar() ? rng.in_disc(r_max, landmark_height()) : rng.in_ball(r_max);
    if (landmark_feasible(z)) return z;
  }
  throw InfeasibleScenarioError("scenario: no feasible landmark position found by sampling");
}

void Scenario::check_feasible_set(int samples) const {
  RNG rng(RNG::derive_seed(seed, 0xFEA51B1Eull));
  for (int i = 0; i < samples; ++i) {
    const Vec3 z = planar() ? rng.in_disc(r_max, landmark_height()) : rng.in_ball(r_max);
    if (landmark_feasible(z)) return;
  }
  throw InfeasibleScenarioError("scenario: feasible set empty after " + std::to_string(samples) +
                                " rejection samples");
}

std::pair<double, double> best_heading(const Vec3& x, std::span<const Vec3> landmarks,
                                       double alpha, double delta) {
  const double ca = std::cos(alpha / 2.0);
  if (landmarks.empty()) return {0.0, std::numeric_limits<double>::infinity()};

  const auto min_residual = [&](double phi) {
    double worst = std::numeric_limits<double>::infinity();
    for (const Vec3& z : landmarks)
      worst = std::min(worst, fov_residual(phi, x, z, alpha, delta));
    return worst;
  };

  // Candidates: bearing angles, admissible-arc endpoints (where a single cone
  // residual crosses zero), and a coarse sweep to cover multi-arc geometry.
  std::vector<double> candidates;
  candidates.reserve(4 * landmarks.size() + 90);
  for (const Vec3& z : landmarks) {
    const double dx = z.x() - x.x(), dy = z.y() - x.y();
    const double dn = std::hypot(dx, dy);
    const double beta = std::atan2(dy, dx);
    candidates.push_back(beta);
    if (dn > 1e-12) {
      const double c = ca * std::sqrt(dn * dn + delta * delta) / dn;
      if (c >= -1.0 && c <= 1.0) {
        const double gamma = std::acos(c);
        candidates.push_back(beta - gamma);
        candidates.push_back(beta + gamma);
      }
    }
  }
  for (int k = 0; k < 90; ++k) candidates.push_back(2.0 * M_PI * k / 90.0);

  double best_phi = candidates.front();
  double best_val = min_residual(best_phi);
  for (double phi : candidates) {
    const double v = min_residual(phi);
    if (v > best_val) {
      best_val = v;
      best_phi = phi;
    }
  }

  // Local ternary refinement around the best candidate.
  double lo = best_phi - M_PI / 90.0, hi = best_phi + M_PI / 90.0;
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (min_residual(m1) < min_residual(m2))
      lo = m1;
    else
      hi = m2;
  }
  const double refined = 0.5 * (lo + hi);
  if (min_residual(refined) > best_val) {
    best_val = min_residual(refined);
    best_phi = refined;
  }
  best_phi = std::remainder(best_phi, 2.0 * M_PI);
  return {best_phi, best_val};
}

}  // namespace lmopt
