#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lmopt/nlp.hpp"
#include "support/test_helpers.hpp"

using namespace lmopt;
using namespace lmopt::testing;

namespace {

Scenario fov_scenario(int n, int m, std::uint64_t seed) {
  Scenario sc = random_scenario(n, m, seed, 0.1, 30.0, 0.05, 20.0);
  sc.r_max = 40.0;
  FovSpec fov;
  fov.alpha = 1.5 * M_PI;
  fov.landmark_height = 0.0;
  sc.fov = fov;
  // setpoints above the landmark plane so separation holds in 3d
  for (Vec3& x : sc.setpoints) x.z() = std::abs(x.z()) + 3.0;
  return sc;
}

Eigen::VectorXd random_interior_point(const NlpInstance& nlp, RNG& rng) {
  const Scenario& sc = nlp.scenario();
  for (;;) {
    std::vector<Vec3> z(sc.budget);
    for (Vec3& zj : z) zj = sc.sample_feasible_landmark(rng);
    std::vector<double> headings;
    if (sc.fov) {
      headings.resize(sc.num_setpoints());
      bool ok = true;
      for (int i = 0; i < sc.num_setpoints(); ++i) {
        const auto [phi, res] = best_heading(sc.setpoints[i], z, sc.fov->alpha, sc.model.delta);
        if (res < 1e-4) {
          ok = false;
          break;
        }
        headings[i] = phi;
      }
      if (!ok) continue;
    }
    double max_cost = 0.0;
    for (int i = 0; i < sc.num_setpoints(); ++i)
      max_cost = std::max(max_cost, localization_cost(sc.setpoints[i], z, sc.model_for(i)));
    const Eigen::VectorXd x = nlp.pack(z, headings, 1.2 * max_cost);
    if (nlp.min_residual(x) > 1e-6) return x;
  }
}

}  // namespace

TEST_CASE("instance dimensions and constraint counts") {
  Scenario sc = random_scenario(4, 2, 5);
  NlpInstance nlp = build_nlp(sc);
  CHECK(nlp.dimension() == 7);
  CHECK(nlp.num_constraints() == 4 + 2 + 8);

  Scenario withfov = fov_scenario(10, 5, 6);
  NlpInstance nlp2 = build_nlp(withfov);
  CHECK(nlp2.dimension() == 2 * 5 + 10 + 1);
  CHECK(nlp2.num_constraints() == 10 + 5 + 50 + 50);
}

TEST_CASE("objective is the epigraph variable") {
  NlpInstance nlp = build_nlp(random_scenario(3, 2, 7));
  RNG rng(1);
  const Eigen::VectorXd x = random_interior_point(nlp, rng);
  CHECK(nlp.objective(x) == x[nlp.t_index()]);
  const Eigen::VectorXd g = nlp.objective_gradient();
  CHECK(g[nlp.t_index()] == 1.0);
  CHECK(g.lpNorm<1>() == 1.0);
}

TEST_CASE("constraint gradients and hessians match finite differences") {
  for (int variant = 0; variant < 2; ++variant) {
    const Scenario sc = variant == 0 ? random_scenario(4, 2, 11) : fov_scenario(3, 2, 12);
    NlpInstance nlp = build_nlp(sc);
    RNG rng(variant + 100);
    for (int pt = 0; pt < 25; ++pt) {
      const Eigen::VectorXd x = random_interior_point(nlp, rng);
      for (int k = 0; k < nlp.num_constraints(); ++k) {
        const auto value_of = [&](const Eigen::VectorXd& xv) {
          return nlp.constraint_value(k, xv);
        };
        const auto grad_of = [&](const Eigen::VectorXd& xv) -> Eigen::VectorXd {
          return nlp.constraint_gradient(k, xv);
        };
        CHECK(rel_inf_error(nlp.constraint_gradient(k, x), fd_gradient(value_of, x)) <= 1e-5);
        CHECK(rel_inf_error(Eigen::MatrixXd(nlp.constraint_hessian(k, x)),
                            fd_jacobian(grad_of, x, 1e-5)) <= 1e-4);
      }
    }
  }
}

TEST_CASE("barrier assembly agrees with per-constraint callbacks") {
  const Scenario sc = random_scenario(4, 3, 13);
  NlpInstance nlp = build_nlp(sc);
  RNG rng(14);
  const Eigen::VectorXd x = random_interior_point(nlp, rng);
  const double mu = 0.37;

  double value;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::VectorXd c;
  REQUIRE(nlp.barrier(x, mu, &value, &grad, &hess, &c));

  double want_value = nlp.objective(x);
  Eigen::VectorXd want_grad = nlp.objective_gradient();
  Eigen::MatrixXd want_hess = Eigen::MatrixXd::Zero(nlp.dimension(), nlp.dimension());
  for (int k = 0; k < nlp.num_constraints(); ++k) {
    const double ck = nlp.constraint_value(k, x);
    CHECK(ck == doctest::Approx(c[k]).epsilon(1e-12));
    const Eigen::VectorXd gk = nlp.constraint_gradient(k, x);
    want_value -= mu * std::log(ck);
    want_grad -= (mu / ck) * gk;
    want_hess += (mu / (ck * ck)) * gk * gk.transpose();
    want_hess -= (mu / ck) * nlp.constraint_hessian(k, x);
  }
  CHECK(value == doctest::Approx(want_value).epsilon(1e-10));
  CHECK(rel_inf_error(grad, want_grad) <= 1e-10);
  CHECK(rel_inf_error(hess, want_hess) <= 1e-10);
}

TEST_CASE("fov residual basic geometry") {
  const Vec3 x(0, 0, 0);
  const Vec3 z(3, 0, 0);

  // heading aligned, alpha = pi: residual equals the range
  CHECK(fov_residual(0.0, x, z, M_PI, 0.0) == doctest::Approx(3.0).epsilon(1e-12));

  // heading perpendicular, alpha = pi/2: residual is -cos(pi/4) * range
  CHECK(fov_residual(M_PI / 2.0, x, z, M_PI / 2.0, 0.0) ==
        doctest::Approx(-std::cos(M_PI / 4.0) * 3.0).epsilon(1e-12));

  // non-increasing in delta
  double prev = fov_residual(0.3, x, z, M_PI / 2.0, 0.0);
  for (double delta = 0.1; delta <= 3.0; delta += 0.1) {
    const double cur = fov_residual(0.3, x, z, M_PI / 2.0, delta);
    CHECK(cur <= prev + 1e-14);
    prev = cur;
  }
}

TEST_CASE("evaluate placement costs and feasibility") {
  Scenario sc = random_scenario(4, 2, 19);

  SUBCASE("zero budget reports the prior cost") {
    Scenario empty = sc;
    empty.budget = 0;
    const Placement p = evaluate_placement(empty, {});
    CHECK(p.max_cost == doctest::Approx(90.0));
    CHECK(p.feasible);
  }

  SUBCASE("costs are invariant under landmark permutation, exactly") {
    const auto z = random_feasible_landmarks(sc, 3);
    const Placement a = evaluate_placement(sc, z);
    std::vector<Vec3> rev(z.rbegin(), z.rend());
    const Placement b = evaluate_placement(sc, rev);
    CHECK(a.max_cost == b.max_cost);
    for (int i = 0; i < sc.num_setpoints(); ++i)
      CHECK(a.per_setpoint_cost[i] == b.per_setpoint_cost[i]);
  }

  SUBCASE("max cost is the maximum per-setpoint cost") {
    const auto z = random_feasible_landmarks(sc, 4);
    const Placement p = evaluate_placement(sc, z);
    double want = 0.0;
    for (double c : p.per_setpoint_cost) want = std::max(want, c);
    CHECK(p.max_cost == want);
  }

  SUBCASE("constraint violations flip the feasibility flag") {
    auto z = random_feasible_landmarks(sc, 7);
    z[0] = sc.setpoints[0] + Vec3(0.5 * sc.r_min, 0, 0);  // violates separation
    CHECK_FALSE(evaluate_placement(sc, z).feasible);
  }

  SUBCASE("wrong landmark count is rejected") {
    CHECK_THROWS_AS(evaluate_placement(sc, std::vector<Vec3>{}), std::invalid_argument);
  }
}

TEST_CASE("coincident landmarks are worse than a solved spread") {
  // all landmarks stacked at one feasible point weight a single direction
  Scenario sc = random_scenario(4, 3, 23);
  RNG rng(23);
  const Vec3 spot = sc.sample_feasible_landmark(rng);
  const std::vector<Vec3> stacked(3, spot);
  const Placement p_stacked = evaluate_placement(sc, stacked);

  const auto z = random_feasible_landmarks(sc, 29);
  const Placement p_spread = evaluate_placement(sc, z);
  // a generic spread is already better than perfectly collapsed landmarks
  CHECK(p_spread.max_cost < p_stacked.max_cost);
}

TEST_CASE("infeasible scenarios are rejected at build time") {
  Scenario sc;
  sc.setpoints = {{0, 0, 0}};
  sc.budget = 1;
  sc.r_min = 25.0;
  sc.r_max = 10.0;  // separation ball swallows the placement ball
  sc.model = MeasurementModel::isotropic(30.0, 0.1, 0.0);
  CHECK_THROWS_AS(build_nlp(sc), InvalidScenarioError);  // r_min > r_max is structural

  Scenario sc2;
  sc2.setpoints = {{0, 0, 0}};
  sc2.budget = 1;
  sc2.r_min = 9.99;
  sc2.r_max = 10.0;
  sc2.model = MeasurementModel::isotropic(30.0, 0.1, 0.0);
  // thin feasible shell still found by sampling
  CHECK_NOTHROW(build_nlp(sc2));

  // a center setpoint excludes radii below 9; shell setpoints (6 axes plus 8
  // cube diagonals, each with a ~53 degree exclusion cap) cover the rest
  Scenario sc3 = sc2;
  sc3.r_min = 9.0;
  sc3.setpoints = {{0, 0, 0}};
  for (int s : {-1, 1}) {
    sc3.setpoints.push_back({10.0 * s, 0, 0});
    sc3.setpoints.push_back({0, 10.0 * s, 0});
    sc3.setpoints.push_back({0, 0, 10.0 * s});
  }
  const double c = 10.0 / std::sqrt(3.0);
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) sc3.setpoints.push_back({c * sx, c * sy, c * sz});
  CHECK_THROWS_AS(build_nlp(sc3), InfeasibleScenarioError);
}

TEST_CASE("setpoints outside the placement ball only warn") {
  Scenario sc = random_scenario(2, 1, 31);
  sc.setpoints[0] = Vec3(100.0, 0.0, 0.0);  // beyond r_max = 60
  const auto warnings = sc.validate();
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("setpoint 0") != std::string::npos);
}

TEST_CASE("best heading sees a tight cluster and misses a split one") {
  const Vec3 x(0, 0, 0);
  const std::vector<Vec3> cluster = {{5, 1, 0}, {5, -1, 0}, {6, 0, 0}};
  const auto [phi, res] = best_heading(x, cluster, M_PI / 2.0, 0.0);
  CHECK(res > 0.0);
  CHECK(std::abs(std::remainder(phi, 2 * M_PI)) < 0.3);

  const std::vector<Vec3> split = {{5, 0, 0}, {-5, 0, 0}};
  const auto [phi2, res2] = best_heading(x, split, M_PI / 2.0, 0.0);
  (void)phi2;
  CHECK(res2 < 0.0);
}
