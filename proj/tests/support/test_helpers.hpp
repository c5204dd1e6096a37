#pragma once

#include <vector>

#include "lmopt/fd.hpp"
#include "lmopt/rng.hpp"
#include "lmopt/scenario.hpp"

namespace lmopt::testing {

using lmopt::fd_gradient;
using lmopt::fd_jacobian;
using lmopt::rel_inf_error;

/// Random instance in the style of the numerical studies: setpoints uniform
/// in a sphere, landmarks anywhere in a larger ball at least r_min away.
inline Scenario random_scenario(int num_setpoints, int budget, std::uint64_t seed,
                                double sigma_m = 0.1, double prior_variance = 30.0,
                                double delta = 0.0, double sphere_radius = 40.0) {
  RNG rng(seed);
  Scenario sc;
  sc.setpoints.reserve(num_setpoints);
  for (int i = 0; i < num_setpoints; ++i) sc.setpoints.push_back(rng.in_ball(sphere_radius));
  sc.budget = budget;
  sc.r_min = 2.0;
  sc.r_max = 60.0;
  sc.model = MeasurementModel::isotropic(prior_variance, sigma_m, delta);
  sc.seed = seed;
  return sc;
}

inline std::vector<Vec3> random_feasible_landmarks(const Scenario& sc, std::uint64_t seed) {
  RNG rng(seed);
  std::vector<Vec3> z(sc.budget);
  for (Vec3& zj : z) zj = sc.sample_feasible_landmark(rng);
  return z;
}

}  // namespace lmopt::testing
