// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Every tolerance is fixed here, not configurable.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lmopt/baselines.hpp"
#include "lmopt/fd.hpp"
#include "lmopt/sim.hpp"
#include "lmopt/solver.hpp"
#include "lmopt/theory.hpp"
#include "scenario_io.hpp"

using namespace lmopt;
using namespace lmopt::tool;
namespace fs = std::filesystem;

namespace {

const fs::path kCli = LMOPT_CLI_PATH;
const fs::path kScenarios = LMOPT_SCENARIO_DIR;

int g_failures = 0;

void report(int index, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", index, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double wall_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Scenario random_instance(int n, int m, std::uint64_t seed, double sigma_m) {
  RNG rng(seed);
  Scenario sc;
  for (int i = 0; i < n; ++i) sc.setpoints.push_back(rng.in_ball(40.0));
  sc.budget = m;
  sc.r_min = 2.0;
  sc.r_max = 60.0;
  sc.model = MeasurementModel::isotropic(30.0, sigma_m, 0.001);
  sc.seed = seed;
  return sc;
}

// ---------------------------------------------------------------------------
// 1. analytic gradient and Hessian of the cost match central differences
void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_grad = 0.0, worst_hess = 0.0;
  for (const auto [n, m] : {std::pair{1, 1}, {4, 2}, {10, 5}}) {
    RNG rng(41000 + n * 100 + m);
    for (int config = 0; config < 100; ++config) {
      Scenario sc = random_instance(n, m, rng.bits(), 0.1);
      std::vector<Vec3> z(m);
      RNG zrng(rng.bits());
      for (Vec3& zj : z) zj = sc.sample_feasible_landmark(zrng);
      const int audit_setpoint = config % n;
      const Vec3& x = sc.setpoints[audit_setpoint];

      const DerivBundle b = cost_derivatives(x, z, sc.model);
      Eigen::VectorXd flat(3 * m);
      for (int j = 0; j < m; ++j) flat.segment<3>(3 * j) = z[j];
      const auto cost_of = [&](const Eigen::VectorXd& f) {
        std::vector<Vec3> zz(m);
        for (int j = 0; j < m; ++j) zz[j] = f.segment<3>(3 * j);
        return localization_cost(x, zz, sc.model);
      };
      const auto grad_of = [&](const Eigen::VectorXd& f) -> Eigen::VectorXd {
        std::vector<Vec3> zz(m);
        for (int j = 0; j < m; ++j) zz[j] = f.segment<3>(3 * j);
        return cost_derivatives(x, zz, sc.model).grad;
      };
      worst_grad = std::max(worst_grad, rel_inf_error(b.grad, fd_gradient(cost_of, flat)));
      worst_hess = std::max(worst_hess, rel_inf_error(b.hess, fd_jacobian(grad_of, flat, 1e-5)));
    }
  }
  const double elapsed = wall_since(t0);
  const bool ok = worst_grad <= 1e-5 && worst_hess <= 1e-4 && elapsed < 10.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "derivative audit: worst grad %.2e (<=1e-5), worst hess %.2e (<=1e-4), %.1f s (<10)",
                worst_grad, worst_hess, elapsed);
  report(1, ok, buf);
}

// ---------------------------------------------------------------------------
// 2. filter posterior covariance equals the inverse information matrix
void criterion_2() {
  double worst = 0.0;
  RNG rng(42);
  for (int config = 0; config < 100; ++config) {
    const Vec3 mean = rng.normal_vec3(5.0);
    const double pv = rng.uniform(0.1, 2.0);
    const SymMat3 cov = SymMat3::identity(pv);
    const int m = 1 + static_cast<int>(rng.uniform_index(5));
    MeasurementModel model =
        MeasurementModel::isotropic(pv, rng.uniform(0.02, 0.2), config % 2 == 0 ? 0.0 : 0.05);
    model.prior_info = cov.inverse();
    std::vector<Vec3> z(m);
    std::vector<BearingObservation> obs(m);
    for (int j = 0; j < m; ++j) {
      z[j] = mean + rng.uniform(2.0, 20.0) * rng.unit_vec3();
      obs[j] = {sample_bearing(mean, z[j], model, rng), z[j]};
    }
    const auto [post_mean, post_cov] = ekf_update(mean, cov, obs, model);
    const SymMat3 want = total_info(mean, z, model).j.inverse();
    const Eigen::Matrix3d diff = post_cov.dense() - want.dense();
    worst = std::max(worst, diff.cwiseAbs().maxCoeff());
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "information-filter identity: worst deviation %.2e (<=1e-10)",
                worst);
  report(2, worst <= 1e-10, buf);
}

// ---------------------------------------------------------------------------
// 3. randomized certification of the smoothing bounds
void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  long violations = 0, checked = 0;
  for (const auto [eta, zeta] : {std::pair{0.1, 10.0}, {1.0, 100.0}}) {
    const TheoryParams p = TheoryParams::from_eta_zeta(eta, zeta, 2.0, 5, 0.1);
    const CertificationSummary s = certify_sandwich_random(p, 30.0, 1000, 4300, 4);
    violations += s.violations;
    checked += s.checked;
    if (s.checked != 1000) violations += 1000 - s.checked;  // generator shortfall counts
  }
  const CertificationSummary c1 = certify_claim1_random(0.1, 10000, 4301, 4);
  const TheoryParams p2 = TheoryParams::from_eta_zeta(0.1, 10.0, 2.0, 5, 0.1);
  const CertificationSummary c2 = certify_claim2_random(p2, 30.0, 10000, 4302, 4);
  violations += c1.violations + c2.violations;
  checked += c1.checked + c2.checked;
  const double elapsed = wall_since(t0);
  const bool ok = violations == 0 && checked >= 2000 + 20000 && elapsed < 60.0;
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "smoothing bounds: %ld configs certified, %ld violations, %.1f s (<60)", checked,
                violations, elapsed);
  report(3, ok, buf);
}

// ---------------------------------------------------------------------------
// 4+6. benchmark gaps and timing order at (10, 5)
void criteria_4_and_6() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> gap_ours, gap_greedy, t_ours, t_evo;
  for (int inst = 0; inst < 10; ++inst) {
    const Scenario sc = random_instance(10, 5, 46000 + inst, 0.1);

    auto tic = std::chrono::steady_clock::now();
    SolverConfig cfg;
    cfg.rng_seed = 1;
    cfg.starts = 10;
    cfg.workers = 1;
    const double ours = solve(build_nlp(sc), cfg).objective;
    t_ours.push_back(wall_since(tic));

    const double greedy = greedy_place(sc, {.workers = 1}).max_cost;

    tic = std::chrono::steady_clock::now();
    EvoConfig ecfg;
    ecfg.rng_seed = 1;
    ecfg.workers = 1;
    const double evo = evolve_place(sc, ecfg).max_cost;
    t_evo.push_back(wall_since(tic));

    gap_ours.push_back((ours - evo) / evo);
    gap_greedy.push_back((greedy - evo) / evo);
  }
  const double elapsed = wall_since(t0);
  const double mg_ours = median(gap_ours), mg_greedy = median(gap_greedy);
  const double mt_ours = median(t_ours), mt_evo = median(t_evo);

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "team-size table: median gap ours %+.3f (<=0.05), greedy %+.3f (>=0.15), %.0f s (<600)",
                mg_ours, mg_greedy, elapsed);
  report(4, mg_ours <= 0.05 && mg_greedy >= 0.15 && elapsed < 600.0, buf);

  std::snprintf(buf, sizeof buf,
                "timing order: ours %.3f s < evolutionary %.3f s at gap %+.3f (<=0.05)", mt_ours,
                mt_evo, mg_ours);
  report(6, mt_ours < mt_evo && mg_ours <= 0.05, buf);
}

// ---------------------------------------------------------------------------
// 5. greedy suboptimality grows as the noise shrinks
void criterion_5() {
  const auto gap_at = [&](double sigma) {
    std::vector<double> gaps;
    for (int inst = 0; inst < 8; ++inst) {
      const Scenario sc = random_instance(10, 5, 45000 + inst, sigma);
      const double greedy = greedy_place(sc, {.workers = 1}).max_cost;
      EvoConfig ecfg;
      ecfg.rng_seed = 1;
      ecfg.workers = 4;
      const double evo = evolve_place(sc, ecfg).max_cost;
      gaps.push_back((greedy - evo) / evo);
    }
    return median(gaps);
  };
  const double gap_coarse = gap_at(1.0);
  const double gap_fine = gap_at(0.03125);
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "noise table: greedy gap %.3f at sigma 2^-5 vs %.3f at sigma 1 (factor %.1f >= 3)",
                gap_fine, gap_coarse, gap_fine / std::max(gap_coarse, 1e-9));
  report(5, gap_fine >= 3.0 * gap_coarse, buf);
}

// ---------------------------------------------------------------------------
// 7. rectangle landscape: distinct minima and the centroid saddle
void criterion_7() {
  const ScenarioFile sf = load_scenario(kScenarios / "rectangle.json");
  SolverConfig cfg;
  cfg.rng_seed = 7;
  cfg.starts = 20;
  cfg.workers = 4;
  const SolveReport rep = solve(build_nlp(sf.scenario), cfg);

  bool minima_ok = rep.distinct_local_minima.size() >= 2;
  double spread = 0.0;
  if (minima_ok) {
    const double best = rep.distinct_local_minima.front().objective;
    const double worst = rep.distinct_local_minima.back().objective;
    spread = (worst - best) / best;
    minima_ok = spread >= 1.0;
  }

  // stacked-at-centroid arrangement must admit a strictly improving move
  const Vec3 centroid(0, 0, 0);
  const std::vector<Vec3> stacked = {centroid, centroid};
  const Placement p0 = evaluate_placement(sf.scenario, stacked);
  RNG rng(3);
  int descents = 0;
  for (int probe = 0; probe < 200; ++probe) {
    const std::vector<Vec3> z = {centroid + 0.25 * rng.unit_vec3(),
                                 centroid + 0.25 * rng.unit_vec3()};
    const Placement p = evaluate_placement(sf.scenario, z);
    if (p.feasible && p.max_cost < p0.max_cost - 1e-9) ++descents;
  }
  char buf[224];
  std::snprintf(buf, sizeof buf,
                "landscape: %zu distinct minima, spread %.0f%% (>=100%%), centroid descent %d/200 probes",
                rep.distinct_local_minima.size(), 100.0 * spread, descents);
  report(7, minima_ok && p0.feasible && descents > 0, buf);
}

// ---------------------------------------------------------------------------
// 8. predicted covariance trace against Monte-Carlo squared error
void criterion_8() {
  const ScenarioFile sf = load_scenario(kScenarios / "single_setpoint.json");
  SolverConfig cfg;
  cfg.rng_seed = 1;
  cfg.workers = 4;
  const SolveReport rep = solve(build_nlp(sf.scenario), cfg);
  const std::vector<Vec3>& z = rep.best.landmarks;

  const Vec3 x = sf.scenario.setpoints[0];
  const SymMat3 prior_cov = sf.scenario.model.prior_info.inverse();
  const double prior_sigma = std::sqrt(prior_cov.xx);
  MeasurementModel model = sf.scenario.model;

  const double predicted = total_info(x, z, model).j.inverse().trace();
  RNG rng(48);
  const int trials = 100000;
  double mse = 0.0;
  std::vector<BearingObservation> obs(z.size());
  for (int t = 0; t < trials; ++t) {
    const Vec3 truth = x + rng.normal_vec3(prior_sigma);
    for (std::size_t j = 0; j < z.size(); ++j)
      obs[j] = {sample_bearing(truth, z[j], model, rng), z[j]};
    const auto [post_mean, post_cov] = ekf_update(x, prior_cov, obs, model);
    mse += (post_mean - truth).squaredNorm();
  }
  mse /= trials;
  const double rel = std::abs(mse - predicted) / predicted;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "monte-carlo covariance: predicted %.4f vs empirical %.4f, off by %.1f%% (<=15%%)",
                predicted, mse, 100.0 * rel);
  report(8, rel <= 0.15, buf);
}

// ---------------------------------------------------------------------------
// 9. paired drift reduction on the standard mission
void criterion_9() {
  const ScenarioFile sf = load_scenario(kScenarios / "mission_scenario.json");
  const MissionFile mf = load_mission(kScenarios / "mission_square.json");

  Scenario route_sc = sf.scenario;
  route_sc.setpoints = discretize_trajectory(mf.mission.waypoints, mf.setpoint_spacing);
  SolverConfig cfg;
  cfg.rng_seed = route_sc.seed;
  cfg.workers = 4;
  const std::vector<Vec3> optimized = solve(build_nlp(route_sc), cfg).best.landmarks;

  std::vector<double> reductions, drift_opt, drift_rand;
  for (int run = 0; run < 50; ++run) {
    Mission mission = mf.mission;
    mission.rng_seed = mf.mission.rng_seed + run;

    const DriftReport with_opt =
        run_drift_mission(mission, optimized, route_sc.model, route_sc.fov);
    reductions.push_back(with_opt.drift_reduction);
    drift_opt.push_back(with_opt.final_drift_with);

    RNG rng(RNG::derive_seed(mission.rng_seed, 21));
    std::vector<Vec3> random_z(route_sc.budget);
    for (Vec3& zj : random_z) zj = route_sc.sample_feasible_landmark(rng);
    const DriftReport with_rand =
        run_drift_mission(mission, random_z, route_sc.model, route_sc.fov);
    drift_rand.push_back(with_rand.final_drift_with);
  }
  const double med_reduction = median(reductions);
  const double med_opt = median(drift_opt), med_rand = median(drift_rand);
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "drift reduction: median %.2f (>=0.5); optimized drift %.2f m <= random %.2f m",
                med_reduction, med_opt, med_rand);
  report(9, med_reduction >= 0.5 && med_opt <= med_rand, buf);
}

// ---------------------------------------------------------------------------
// 10. byte-identical outputs across worker counts for every command
void criterion_10() {
  const fs::path dir = fs::temp_directory_path() / "lmopt_acceptance";
  fs::create_directories(dir);
  const auto run = [&](const std::string& args) {
    const std::string cmd = kCli.string() + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str())) == 0;
  };
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  bool ok = true;
  ok = ok && run("solve " + (kScenarios / "rectangle.json").string() + " --workers 1 --out " +
                 (dir / "s1.json").string());
  ok = ok && run("solve " + (kScenarios / "rectangle.json").string() + " --workers 7 --out " +
                 (dir / "s2.json").string());
  ok = ok && slurp(dir / "s1.csv") == slurp(dir / "s2.csv") && !slurp(dir / "s1.csv").empty();

  ok = ok && run("bench " + (kScenarios / "bench_desk.json").string() + " " +
                 (dir / "b1").string() + " --workers 1");
  ok = ok && run("bench " + (kScenarios / "bench_desk.json").string() + " " +
                 (dir / "b2").string() + " --workers 7");
  ok = ok && slurp(dir / "b1" / "results.csv") == slurp(dir / "b2" / "results.csv");
  ok = ok && slurp(dir / "b1" / "summary.csv") == slurp(dir / "b2" / "summary.csv");

  ok = ok && run("verify-theory " + (kScenarios / "default.json").string() +
                 " --draws 200 --workers 1 --out " + (dir / "v1.json").string());
  ok = ok && run("verify-theory " + (kScenarios / "default.json").string() +
                 " --draws 200 --workers 7 --out " + (dir / "v2.json").string());
  ok = ok && slurp(dir / "v1.csv") == slurp(dir / "v2.csv") && !slurp(dir / "v1.csv").empty();

  const std::string sim_base = "simulate " + (kScenarios / "mission_scenario.json").string() +
                               " " + (kScenarios / "mission_square.json").string() +
                               " --placement random ";
  ok = ok && run(sim_base + "--workers 1 --out " + (dir / "m1.csv").string());
  ok = ok && run(sim_base + "--workers 7 --out " + (dir / "m2.csv").string());
  ok = ok && slurp(dir / "m1.csv") == slurp(dir / "m2.csv") && !slurp(dir / "m1.csv").empty();

  report(10, ok, "determinism: solve/bench/verify-theory/simulate byte-identical across workers");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criteria_4_and_6();
  criterion_5();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
