#include "lmopt/sim.hpp"

#include <algorithm>
#include <cmath>

#include "lmopt/nlp.hpp"

namespace lmopt {

void Mission::validate() const {
  if (waypoints.size() < 2) throw std::invalid_argument("mission: needs at least two waypoints");
  if (!(speed > 0)) throw std::invalid_argument("mission: speed must be positive");
  if (bearing_fix_interval < 1)
    throw std::invalid_argument("mission: bearing_fix_interval must be positive");
  if (!(odom_noise >= 0)) throw std::invalid_argument("mission: odom_noise must be >= 0");
}

Vec3 sample_bearing(const Vec3& x_true, const Vec3& z, const MeasurementModel& model, RNG& rng) {
  const Vec3 h = smoothed_bearing(x_true, z, 0.0);
  return h + rng.normal_vec3(model.sigma_m);
}

namespace {

// dh/dx for the (possibly smoothed) bearing; symmetric, and its square is the
// pair information matrix.
Eigen::Matrix3d bearing_jacobian(const Vec3& x, const Vec3& z, double delta) {
  const Vec3 r = z - x;
  const double q2 = r.squaredNorm() + delta * delta;
  const double q = std::sqrt(q2);
  return -(Eigen::Matrix3d::Identity() - (r * r.transpose()) / q2) / q;
}

}  // namespace

std::pair<Vec3, SymMat3> ekf_update(const Vec3& prior_mean, const SymMat3& prior_cov,
                                    std::span<const BearingObservation> observations,
                                    const MeasurementModel& model) {
  if (!prior_cov.is_positive_definite())
    throw std::runtime_error("ekf_update: prior covariance not positive definite");
  const double w = 1.0 / (model.sigma_m * model.sigma_m);

  SymMat3 info = prior_cov.inverse();
  Vec3 rhs = Vec3::Zero();
  for (const BearingObservation& obs : observations) {
    info += w * pair_info(prior_mean, obs.landmark, model.delta);
    const Vec3 predicted = smoothed_bearing(prior_mean, obs.landmark, model.delta);
    const Eigen::Matrix3d jac = bearing_jacobian(prior_mean, obs.landmark, model.delta);
    rhs += w * jac.transpose() * (obs.measurement - predicted);
  }
  if (!(std::abs(info.determinant()) > 0.0) || !std::isfinite(info.determinant()))
    throw std::runtime_error("ekf_update: singular posterior information");

  const SymMat3 cov = info.inverse();
  const Vec3 mean = prior_mean + cov * rhs;
  return {mean, cov};
}

DriftReport run_drift_mission(const Mission& mission, std::span<const Vec3> landmarks,
                              const MeasurementModel& model, const std::optional<FovSpec>& fov) {
  mission.validate();
  const std::vector<Vec3> path = discretize_trajectory(mission.waypoints, mission.speed);
  const int steps = static_cast<int>(path.size()) - 1;

  // One odometry noise stream shared by both arms; bearing noise lives on an
  // independent stream so the arms stay paired.
  RNG odom_rng(RNG::derive_seed(mission.rng_seed, 1));
  RNG bearing_rng(RNG::derive_seed(mission.rng_seed, 2));
  std::vector<Vec3> odom_noise(std::max(steps, 0));
  for (Vec3& e : odom_noise) e = odom_rng.normal_vec3(mission.odom_noise);

  // without corrections: pure dead reckoning
  Vec3 est_plain = path.front();
  for (int k = 0; k < steps; ++k) est_plain += (path[k + 1] - path[k]) + odom_noise[k];

  // with corrections: propagate mean and covariance, update on fix steps
  Vec3 mean = path.front();
  SymMat3 cov = SymMat3::identity(1e-12);
  const double q = mission.odom_noise * mission.odom_noise;
  for (int k = 0; k < steps; ++k) {
    mean += (path[k + 1] - path[k]) + odom_noise[k];
    cov += SymMat3::identity(q);
    if ((k + 1) % mission.bearing_fix_interval == 0 && !landmarks.empty()) {
      const Vec3& truth = path[k + 1];
      std::vector<BearingObservation> obs;
      obs.reserve(landmarks.size());
      for (const Vec3& z : landmarks) {
        if (fov) {
          // visible only inside the heading cone along the direction of travel
          const Vec3 travel = path[k + 1] - path[k];
          const double phi = std::atan2(travel.y(), travel.x());
          if (fov_residual(phi, truth, z, fov->alpha, 0.0) < 0.0) continue;
        }
        obs.push_back({sample_bearing(truth, z, model, bearing_rng), z});
      }
      if (!obs.empty()) {
        MeasurementModel step_model = model;
        step_model.prior_info = cov.inverse();
        std::tie(mean, cov) = ekf_update(mean, cov, obs, step_model);
      }
    }
  }

  DriftReport r;
  r.drift_components_without = est_plain - path.back();
  r.drift_components_with = mean - path.back();
  r.final_drift_without = r.drift_components_without.norm();
  r.final_drift_with = r.drift_components_with.norm();
  r.drift_reduction = r.final_drift_without > 0.0
                          ? 1.0 - r.final_drift_with / r.final_drift_without
                          : 0.0;
  return r;
}

std::vector<Vec3> discretize_trajectory(std::span<const Vec3> waypoints, double spacing) {
  if (!(spacing > 0)) throw std::invalid_argument("discretize_trajectory: spacing must be > 0");
  if (waypoints.empty()) return {};
  if (waypoints.size() == 1) return {waypoints[0]};

  std::vector<double> cumulative(waypoints.size(), 0.0);
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    cumulative[i] = cumulative[i - 1] + (waypoints[i] - waypoints[i - 1]).norm();
  const double total = cumulative.back();

  const auto at_arclength = [&](double s) -> Vec3 {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const std::size_t seg = std::min<std::size_t>(
        std::max<std::ptrdiff_t>(it - cumulative.begin() - 1, 0), waypoints.size() - 2);
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    const double u = seg_len > 0 ? (s - cumulative[seg]) / seg_len : 0.0;
    return waypoints[seg] + u * (waypoints[seg + 1] - waypoints[seg]);
  };

  const int count = static_cast<int>(std::floor(total / spacing + 1e-12)) + 1;
  std::vector<Vec3> out;
  out.reserve(count);
  for (int k = 0; k + 1 < count; ++k) out.push_back(at_arclength(k * spacing));
  out.push_back(waypoints.back());  // snap the last sample to the endpoint
  return out;
}

std::vector<Vec3> sample_coverage(const Box& region, double spacing, bool jitter,
                                  std::uint64_t seed) {
  if (!(spacing > 0)) throw std::invalid_argument("sample_coverage: spacing must be > 0");
  for (int a = 0; a < 3; ++a)
    if (!(region.hi[a] > region.lo[a]))
      throw std::invalid_argument("sample_coverage: box extents must be positive");

  std::array<int, 3> counts;
  for (int a = 0; a < 3; ++a)
    counts[a] = static_cast<int>(std::floor((region.hi[a] - region.lo[a]) / spacing + 1e-9)) + 1;

  RNG rng(seed);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(counts[0]) * counts[1] * counts[2]);
  for (int ix = 0; ix < counts[0]; ++ix)
    for (int iy = 0; iy < counts[1]; ++iy)
      for (int iz = 0; iz < counts[2]; ++iz) {
        Vec3 p(region.lo.x() + ix * spacing, region.lo.y() + iy * spacing,
               region.lo.z() + iz * spacing);
        if (jitter)
          for (int a = 0; a < 3; ++a)
            p[a] = std::clamp(p[a] + spacing * rng.uniform(-0.5, 0.5), region.lo[a], region.hi[a]);
        else
          for (int a = 0; a < 3; ++a) p[a] = std::min(p[a], region.hi[a]);
        pts.push_back(p);
      }
  return pts;
}

}  // namespace lmopt
