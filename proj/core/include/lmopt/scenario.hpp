#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmopt/model.hpp"
#include "lmopt/rng.hpp"

namespace lmopt {

/// Heading-cone sensing restriction. Landmarks live on a horizontal plane and
/// each setpoint carries one planar heading that must see every landmark
/// within the half-angle alpha/2.
struct FovSpec {
  double alpha = M_PI;           // full cone opening, radians, in (0, 2*pi)
  double landmark_height = 0.0;  // m
  bool planar = true;            // landmarks restricted to the plane (required)
};

/// One placement problem instance: where localization quality is evaluated,
/// how many landmarks may be placed, and inside which region.
struct Scenario {
  std::vector<Vec3> setpoints;
  int budget = 1;  // number of landmarks M
  double r_min = 1.0;
  double r_max = 10.0;
  MeasurementModel model;
  std::optional<FovSpec> fov;
  std::uint64_t seed = 0;

  /// Optional per-setpoint prior overrides; empty means the shared
  /// model.prior_info applies everywhere.
  std::vector<SymMat3> prior_overrides;

  int num_setpoints() const { return static_cast<int>(setpoints.size()); }
  bool planar() const { return fov.has_value(); }
  double landmark_height() const { return fov ? fov->landmark_height : 0.0; }

  const SymMat3& prior_info(int i) const {
    return prior_overrides.empty() ? model.prior_info : prior_overrides[i];
  }

  MeasurementModel model_for(int i) const {
    MeasurementModel m = model;
    m.prior_info = prior_info(i);
    return m;
  }

  /// Structural validation; throws InvalidScenarioError. Returns warnings
  /// (e.g. setpoints outside the placement ball) that do not reject the
  /// scenario.
  std::vector<std::string> validate() const;

  /// Rejection-samples the landmark-feasible set; throws
  /// InfeasibleScenarioError when no feasible point is found.
  void check_feasible_set(int samples = 10000) const;

  /// One feasible landmark position with strict constraint slack, or throws
  /// InfeasibleScenarioError after max_attempts.
  Vec3 sample_feasible_landmark(RNG& rng, long max_attempts = 100000) const;

  bool landmark_feasible(const Vec3& z, double slack = 1e-6) const;
};

struct Placement {
  std::vector<Vec3> landmarks;
  std::vector<Vec2> headings;  // one per setpoint when the scenario has a FOV
  bool feasible = false;
  double max_cost = 0.0;
  std::vector<double> per_setpoint_cost;
};

/// Best heading for seeing all landmarks from x: the angle maximizing the
/// minimum cone residual, found by intersecting the per-landmark admissible
/// arcs. Returns {angle, min residual}; the residual is negative when no
/// heading satisfies every cone.
std::pair<double, double> best_heading(const Vec3& x, std::span<const Vec3> landmarks,
                                       double alpha, double delta);

}  // namespace lmopt
