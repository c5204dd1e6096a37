#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <mutex>

#include "lmopt/solver.hpp"
#include "support/test_helpers.hpp"

using namespace lmopt;
using namespace lmopt::testing;

namespace {

Scenario single_setpoint_scenario() {
  Scenario sc;
  sc.setpoints = {{0, 0, 0}};
  sc.budget = 2;
  sc.r_min = 2.0;
  sc.r_max = 8.0;
  sc.model = MeasurementModel::isotropic(30.0, 0.1, 0.0);
  sc.seed = 4;
  return sc;
}

Scenario rectangle_scenario() {
  Scenario sc;
  sc.setpoints = {{15, 5, 0}, {15, -5, 0}, {-15, 5, 0}, {-15, -5, 0}};
  sc.budget = 2;
  sc.r_min = 12.0;
  sc.r_max = 80.0;
  sc.model = MeasurementModel::isotropic(30.0, 0.05, 0.001);
  sc.seed = 7;
  return sc;
}

}  // namespace

TEST_CASE("initial points are strictly feasible and seed-deterministic") {
  const Scenario sc = random_scenario(6, 3, 17);
  NlpInstance nlp = build_nlp(sc);

  RNG rng_a(5);
  const auto starts_a = initialize_starts(nlp, 8, rng_a);
  REQUIRE(starts_a.size() == 8);
  for (const auto& x : starts_a) CHECK(nlp.min_residual(x) >= 1e-6);

  RNG rng_b(5);
  const auto starts_b = initialize_starts(nlp, 8, rng_b);
  for (std::size_t i = 0; i < starts_a.size(); ++i) CHECK(starts_a[i] == starts_b[i]);

  RNG rng_c(5);
  const auto only_heuristic = initialize_starts(nlp, 1, rng_c);
  REQUIRE(only_heuristic.size() == 1);
  CHECK(only_heuristic[0] == starts_a[0]);
}

TEST_CASE("single setpoint optimum matches an exhaustive grid search") {
  const Scenario sc = single_setpoint_scenario();
  SolverConfig cfg;
  cfg.rng_seed = 4;
  cfg.starts = 10;
  const SolveReport rep = solve(build_nlp(sc), cfg);
  CHECK(rep.kkt_residual <= cfg.kkt_tol);
  CHECK(rep.starts_converged >= 1);

  // Two landmarks and the setpoint are coplanar, and the isotropic prior
  // makes the plane and the first bearing angle arbitrary: a grid over
  // (radius, angle, radius) at 0.1 m / 1 degree is exhaustive.
  double best = std::numeric_limits<double>::infinity();
  std::pair<Vec3, Vec3> best_z;
  for (double r1 = sc.r_min; r1 <= sc.r_max + 1e-9; r1 += 0.1)
    for (double deg = 0.0; deg <= 180.0 + 1e-9; deg += 1.0)
      for (double r2 = sc.r_min; r2 <= sc.r_max + 1e-9; r2 += 0.1) {
        const double th = deg * M_PI / 180.0;
        const std::vector<Vec3> z = {{r1, 0, 0}, {r2 * std::cos(th), r2 * std::sin(th), 0}};
        const double c = localization_cost({0, 0, 0}, z, sc.model);
        if (c < best) {
          best = c;
          best_z = {z[0], z[1]};
        }
      }
  CHECK(std::abs(rep.objective - best) <= 0.01 * best);

  // optimal bearings are near-orthogonal
  const Vec3 u = rep.best.landmarks[0].normalized();
  const Vec3 v = rep.best.landmarks[1].normalized();
  CHECK(std::abs(u.dot(v)) < 0.1);
}

TEST_CASE("regular polygon symmetry: rotated instance reaches the same value") {
  Scenario sc;
  for (int k = 0; k < 5; ++k) {
    const double a = 2.0 * M_PI * k / 5.0;
    sc.setpoints.push_back({10.0 * std::cos(a), 10.0 * std::sin(a), 0.0});
  }
  sc.budget = 2;
  sc.r_min = 2.0;
  sc.r_max = 30.0;
  sc.model = MeasurementModel::isotropic(30.0, 0.1, 0.0);
  sc.seed = 9;

  SolverConfig cfg;
  cfg.rng_seed = 9;
  cfg.starts = 12;
  const double obj = solve(build_nlp(sc), cfg).objective;

  Scenario rotated = sc;
  const double a = 2.0 * M_PI / 5.0;
  for (Vec3& x : rotated.setpoints)
    x = Vec3(std::cos(a) * x.x() - std::sin(a) * x.y(), std::sin(a) * x.x() + std::cos(a) * x.y(),
             x.z());
  const double obj_rot = solve(build_nlp(rotated), cfg).objective;
  CHECK(std::abs(obj - obj_rot) <= 1e-4 * obj);
}

TEST_CASE("rectangle landscape has far-apart local minima") {
  const Scenario sc = rectangle_scenario();
  SolverConfig cfg;
  cfg.rng_seed = 7;
  cfg.starts = 20;
  cfg.workers = 4;
  const SolveReport rep = solve(build_nlp(sc), cfg);
  REQUIRE(rep.distinct_local_minima.size() >= 2);
  const double best = rep.distinct_local_minima.front().objective;
  const double worst = rep.distinct_local_minima.back().objective;
  CHECK(worst >= 2.0 * best);  // the poor basin is >= 100% worse
  for (const LocalMinimum& lm : rep.distinct_local_minima) {
    CHECK(lm.placement.feasible);
    CHECK(lm.kkt_residual <= cfg.kkt_tol);
  }
}

TEST_CASE("solver report invariants") {
  const Scenario sc = random_scenario(4, 2, 23);
  SolverConfig cfg;
  cfg.rng_seed = 23;
  cfg.starts = 6;
  NlpInstance nlp = build_nlp(sc);
  const SolveReport rep = solve(nlp, cfg);

  CHECK(rep.objective == rep.best.max_cost);
  CHECK(rep.best.feasible);
  CHECK(rep.kkt_residual <= cfg.kkt_tol);
  CHECK(rep.starts_converged >= 1);
  CHECK(rep.newton_iterations_total > 0);

  // never worse than the best initial point
  RNG rng(cfg.rng_seed);
  const auto starts = initialize_starts(nlp, cfg.starts, rng);
  double best_init = std::numeric_limits<double>::infinity();
  for (const auto& x : starts)
    best_init = std::min(best_init, evaluate_placement(sc, nlp.landmarks_from(x)).max_cost);
  CHECK(rep.objective <= best_init + 1e-9);

  // epigraph variable tracks the recomputed maximum cost
  const Placement again = evaluate_placement(sc, rep.best.landmarks);
  CHECK(rep.objective == doctest::Approx(again.max_cost).epsilon(1e-6));
}

TEST_CASE("merit decreases within every barrier stage") {
  const Scenario sc = random_scenario(3, 2, 29);
  SolverConfig cfg;
  cfg.rng_seed = 29;
  cfg.starts = 3;
  cfg.workers = 1;

  std::map<std::pair<int, long>, double> last;  // (start, mu key) -> last merit
  std::mutex m;
  bool monotone = true;
  cfg.merit_observer = [&](int start, double mu, double merit) {
    std::lock_guard lock(m);
    const auto key = std::make_pair(start, static_cast<long>(std::lround(std::log10(mu) * 8)));
    const auto it = last.find(key);
    if (it != last.end() && merit > it->second + 1e-10) monotone = false;
    last[key] = merit;
  };
  solve(build_nlp(sc), cfg);
  CHECK(monotone);
  CHECK_FALSE(last.empty());
}

TEST_CASE("solve is deterministic for a fixed seed across worker counts") {
  const Scenario sc = random_scenario(5, 3, 31);
  NlpInstance nlp = build_nlp(sc);
  SolverConfig cfg;
  cfg.rng_seed = 31;
  cfg.starts = 6;

  cfg.workers = 1;
  const SolveReport a = solve(nlp, cfg);
  cfg.workers = 4;
  const SolveReport b = solve(nlp, cfg);
  CHECK(a.objective == b.objective);
  CHECK(a.starts_converged == b.starts_converged);
  REQUIRE(a.best.landmarks.size() == b.best.landmarks.size());
  for (std::size_t i = 0; i < a.best.landmarks.size(); ++i)
    CHECK(a.best.landmarks[i] == b.best.landmarks[i]);
}

TEST_CASE("desk-scale instance solves quickly") {
  const Scenario sc = random_scenario(10, 5, 99, 0.1, 30.0, 0.001);
  SolverConfig cfg;
  cfg.rng_seed = 1;
  cfg.starts = 10;
  cfg.workers = 4;
  const SolveReport rep = solve(build_nlp(sc), cfg);
  CHECK(rep.starts_converged >= 1);
  CHECK(rep.wall_time_s < 2.0);
}

TEST_CASE("matching distance identifies permuted and shifted sets") {
  const std::vector<Vec3> a = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
  const std::vector<Vec3> b = {{10, 0, 0}, {0, 10, 0}, {0, 0, 0}};  // permuted
  CHECK(matching_distance(a, b) == 0.0);

  std::vector<Vec3> c = b;
  c[2] += Vec3(0.3, 0, 0);
  CHECK(matching_distance(a, c) == doctest::Approx(0.3));

  std::vector<Vec3> d = b;
  d[0] += Vec3(5, 0, 0);
  CHECK(matching_distance(a, d) >= 4.9);
}

TEST_CASE("infeasible start sampling raises the dedicated error") {
  Scenario sc;
  sc.setpoints = {{0, 0, 0}};
  sc.budget = 1;
  sc.r_min = 9.99;
  sc.r_max = 10.0;
  sc.model = MeasurementModel::isotropic(30.0, 0.1, 0.0);
  sc.seed = 3;
  // the shell is nonempty (build succeeds) but too thin for strict slack in
  // a small sample budget is not the case here; instead test the explicit
  // infeasible-scenario path through solve on a covered ball
  Scenario covered = sc;
  covered.r_min = 9.0;
  covered.setpoints = {{0, 0, 0}};
  for (int s : {-1, 1}) {
    covered.setpoints.push_back({10.0 * s, 0, 0});
    covered.setpoints.push_back({0, 10.0 * s, 0});
    covered.setpoints.push_back({0, 0, 10.0 * s});
  }
  const double cc = 10.0 / std::sqrt(3.0);
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) covered.setpoints.push_back({cc * sx, cc * sy, cc * sz});
  CHECK_THROWS_AS(build_nlp(covered), InfeasibleScenarioError);
}
