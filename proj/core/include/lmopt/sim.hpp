#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lmopt/model.hpp"
#include "lmopt/rng.hpp"
#include "lmopt/scenario.hpp"

namespace lmopt {

/// A waypoint route flown at constant speed (one step per second) with
/// random-walk odometry noise and periodic bearing corrections.
struct Mission {
  std::vector<Vec3> waypoints;
  double speed = 1.0;            // m/s; also the step length in meters
  double odom_noise = 0.0;       // per-step translation noise std, m
  int bearing_fix_interval = 5;  // steps between correction updates
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct DriftReport {
  double final_drift_with = 0.0;
  double final_drift_without = 0.0;
  double drift_reduction = 0.0;  // 1 - with/without (0 when both are zero)
  Vec3 drift_components_with = Vec3::Zero();
  Vec3 drift_components_without = Vec3::Zero();
};

struct BearingObservation {
  Vec3 measurement;
  Vec3 landmark;
};

/// Exact bearing to z plus isotropic Gaussian noise of std sigma_m.
Vec3 sample_bearing(const Vec3& x_true, const Vec3& z, const MeasurementModel& model, RNG& rng);

/// One linearized Gauss update about prior_mean. The posterior information is
/// exactly the prior information plus the weighted bearing-Jacobian Gram
/// matrices, which ties this filter to total_info.
std::pair<Vec3, SymMat3> ekf_update(const Vec3& prior_mean, const SymMat3& prior_cov,
                                    std::span<const BearingObservation> observations,
                                    const MeasurementModel& model);

/// Dead-reckons the mission twice on one shared noise stream: once with
/// bearing corrections to the landmarks, once without.
DriftReport run_drift_mission(const Mission& mission, std::span<const Vec3> landmarks,
                              const MeasurementModel& model,
                              const std::optional<FovSpec>& fov = std::nullopt);

/// Arc-length-uniform samples along the waypoint polyline; both endpoints
/// included, floor(length/spacing)+1 points in total.
std::vector<Vec3> discretize_trajectory(std::span<const Vec3> waypoints, double spacing);

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

/// Axis-aligned grid samples of the box, optionally jittered (seeded) and
/// clamped so every point stays inside.
std::vector<Vec3> sample_coverage(const Box& region, double spacing, bool jitter = false,
                                  std::uint64_t seed = 0);

}  // namespace lmopt
