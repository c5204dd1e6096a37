#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Geometry>

#include "lmopt/geometry.hpp"

namespace lmopt {

/// Deterministic random source. All draws are hand-rolled on top of the
/// mt19937_64 bit stream so outputs do not depend on the standard library's
/// distribution implementations.
class RNG {
 public:
  explicit RNG(std::uint64_t seed) : engine_(seed) {}

  /// splitmix64 mix, used to derive independent per-task seeds from one root.
  static std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // modulo bias is negligible for the n used here (n << 2^64)
    return engine_() % n;
  }

  /// Standard normal via Marsaglia's polar method.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Vec3 normal_vec3(double stddev = 1.0) {
    return {stddev * normal(), stddev * normal(), stddev * normal()};
  }

  Vec3 unit_vec3() {
    Vec3 v;
    do {
      v = normal_vec3();
    } while (v.norm() < 1e-12);
    return v.normalized();
  }

  /// Uniform in the solid ball of given radius.
  Vec3 in_ball(double radius) {
    const double r = radius * std::cbrt(uniform01());
    return r * unit_vec3();
  }

  /// Uniform in the disc of given radius at height z.
  Vec3 in_disc(double radius, double z) {
    const double r = radius * std::sqrt(uniform01());
    const double a = uniform(0.0, 2.0 * M_PI);
    return {r * std::cos(a), r * std::sin(a), z};
  }

  /// Uniform random rotation (quaternion method).
  Eigen::Matrix3d rotation() {
    const double u1 = uniform01(), u2 = uniform01(), u3 = uniform01();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    Eigen::Quaterniond q(a * std::sin(2.0 * M_PI * u2), a * std::cos(2.0 * M_PI * u2),
                         b * std::sin(2.0 * M_PI * u3), b * std::cos(2.0 * M_PI * u3));
    return q.toRotationMatrix();
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lmopt
