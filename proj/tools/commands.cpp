#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "lmopt/baselines.hpp"
#include "lmopt/fd.hpp"
#include "lmopt/parallel.hpp"
#include "lmopt/solver.hpp"
#include "lmopt/theory.hpp"
#include "scenario_io.hpp"

namespace lmopt::tool {

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitCertification = 4;

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const InvalidScenarioError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InfeasibleScenarioError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const NonConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    for (const std::string& line : e.trace) std::cerr << "  " << line << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

ScenarioFile load_with_seed(const std::string& path, const GlobalOptions& opts) {
  ScenarioFile sf = load_scenario(path);
  if (opts.seed) sf.scenario.seed = *opts.seed;
  for (const std::string& w : sf.scenario.validate()) std::cerr << "warning: " << w << "\n";
  return sf;
}

std::filesystem::path csv_sibling(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p.replace_extension(".csv");
  return p;
}

double wall_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int cmd_solve(const std::string& scenario_path, const GlobalOptions& opts) {
  return run_guarded([&] {
    const ScenarioFile sf = load_with_seed(scenario_path, opts);
    SolverConfig cfg;
    cfg.starts = opts.starts;
    cfg.kkt_tol = opts.kkt_tol;
    cfg.rng_seed = sf.scenario.seed;
    cfg.workers = opts.workers;
    const SolveReport rep = solve(build_nlp(sf.scenario), cfg);
    const std::filesystem::path out = opts.out.empty() ? "placement.json" : opts.out;
    write_placement_json(out, sf, rep.best, "solve", rep.kkt_residual, rep.starts_converged,
                         rep.distinct_local_minima, rep.wall_time_s);
    write_placement_csv(csv_sibling(out), rep.best, rep.kkt_residual);
    std::cout << "max_cost " << fmt(rep.objective) << " kkt " << fmt(rep.kkt_residual)
              << " starts_converged " << rep.starts_converged << "\n";
    return kExitOk;
  });
}

int cmd_greedy(const std::string& scenario_path, const GlobalOptions& opts) {
  return run_guarded([&] {
    const ScenarioFile sf = load_with_seed(scenario_path, opts);
    GreedyConfig cfg;
    cfg.grid_spacing = opts.grid_spacing;
    cfg.workers = opts.workers;
    const auto t0 = std::chrono::steady_clock::now();
    const Placement p = greedy_place(sf.scenario, cfg);
    const std::filesystem::path out = opts.out.empty() ? "placement.json" : opts.out;
    write_placement_json(out, sf, p, "greedy", -1.0, -1, {}, wall_since(t0));
    write_placement_csv(csv_sibling(out), p, -1.0);
    std::cout << "max_cost " << fmt(p.max_cost) << "\n";
    return kExitOk;
  });
}

int cmd_evolve(const std::string& scenario_path, const GlobalOptions& opts) {
  return run_guarded([&] {
    const ScenarioFile sf = load_with_seed(scenario_path, opts);
    EvoConfig cfg;
    cfg.rng_seed = sf.scenario.seed;
    cfg.workers = opts.workers;
    if (opts.budget > 0) cfg.eval_budget = opts.budget;
    const auto t0 = std::chrono::steady_clock::now();
    const Placement p = evolve_place(sf.scenario, cfg);
    const std::filesystem::path out = opts.out.empty() ? "placement.json" : opts.out;
    write_placement_json(out, sf, p, "evolve", -1.0, -1, {}, wall_since(t0));
    write_placement_csv(csv_sibling(out), p, -1.0);
    std::cout << "max_cost " << fmt(p.max_cost) << "\n";
    return kExitOk;
  });
}

namespace {

struct BenchRow {
  std::string table;
  int n = 0, m = 0;
  double sigma_m = 0;
  int instance = 0, run = 0;
  std::uint64_t seed = 0;
  int resamples = 0;
  std::string algorithm;
  double objective = 0;
  double gap = 0;
  std::string status = "ok";
  double wall_time = 0;
};

struct BenchCell {
  std::string table;
  int n, m;
  double sigma_m;
};

Scenario bench_instance(const BenchSpec& spec, const BenchCell& cell, std::uint64_t instance_seed,
                        int* resamples) {
  *resamples = 0;
  for (;;) {
    RNG rng(RNG::derive_seed(instance_seed, *resamples));
    Scenario sc;
    for (int i = 0; i < cell.n; ++i) sc.setpoints.push_back(rng.in_ball(spec.sphere_radius));
    sc.budget = cell.m;
    sc.r_min = spec.r_min;
    sc.r_max = spec.r_max;
    const TheoryParams tp =
        TheoryParams::select_zeta(10.0 * spec.r_min, spec.r_min, cell.m, cell.sigma_m, 0.1);
    sc.model = MeasurementModel::isotropic(spec.prior_variance, cell.sigma_m,
                                           tp.suggested_delta());
    sc.seed = instance_seed;
    try {
      sc.check_feasible_set();
      return sc;
    } catch (const InfeasibleScenarioError&) {
      ++*resamples;
      if (*resamples > 64) throw;
    }
  }
}

}  // namespace

int cmd_bench(const std::string& spec_path, const std::string& out_dir, const GlobalOptions& opts) {
  return run_guarded([&] {
    BenchSpec spec = load_bench_spec(spec_path);
    if (opts.seed) spec.seed = *opts.seed;
    std::filesystem::create_directories(out_dir);

    std::vector<BenchCell> cells;
    if (spec.table_size)
      for (int n : spec.n_list)
        for (int m : spec.m_list) cells.push_back({"size", n, m, spec.sigma_m});
    if (spec.table_noise)
      for (double s : spec.noise_sigma_list) cells.push_back({"noise", spec.noise_n, spec.noise_m, s});
    if (spec.table_time)
      for (int m : spec.m_list) cells.push_back({"time", spec.noise_n, m, spec.sigma_m});

    struct Task {
      BenchCell cell;
      int instance, run;
      std::uint64_t cell_key;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cells.size(); ++c)
      for (int inst = 0; inst < spec.instances; ++inst)
        for (int run = 0; run < spec.runs; ++run)
          tasks.push_back({cells[c], inst, run, static_cast<std::uint64_t>(c)});

    std::vector<std::array<BenchRow, 3>> rows(tasks.size());
    const int workers = resolve_workers(opts.workers);

    parallel_for(tasks.size(), workers, [&](std::size_t ti) {
      const Task& task = tasks[ti];
      const std::uint64_t instance_seed =
          RNG::derive_seed(spec.seed, task.cell_key * 1000003ull + task.instance);
      const std::uint64_t run_seed = RNG::derive_seed(instance_seed, 7700 + task.run);

      BenchRow base;
      base.table = task.cell.table;
      base.n = task.cell.n;
      base.m = task.cell.m;
      base.sigma_m = task.cell.sigma_m;
      base.instance = task.instance;
      base.run = task.run;
      base.seed = instance_seed;

      int resamples = 0;
      Scenario sc;
      try {
        sc = bench_instance(spec, task.cell, instance_seed, &resamples);
      } catch (const std::exception&) {
        for (int a = 0; a < 3; ++a) {
          rows[ti][a] = base;
          rows[ti][a].algorithm = a == 0 ? "ours" : (a == 1 ? "greedy" : "evolutionary");
          rows[ti][a].status = "infeasible";
        }
        return;
      }
      base.resamples = resamples;

      const auto run_alg = [&](int slot, const std::string& name,
                               const std::function<double()>& alg) {
        rows[ti][slot] = base;
        rows[ti][slot].algorithm = name;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          rows[ti][slot].objective = alg();
        } catch (const InfeasibleScenarioError&) {
          rows[ti][slot].status = "infeasible";
        } catch (const NonConvergenceError&) {
          rows[ti][slot].status = "non_convergence";
        } catch (const std::exception&) {
          rows[ti][slot].status = "error";
        }
        rows[ti][slot].wall_time = wall_since(t0);
      };

      run_alg(2, "evolutionary", [&] {
        EvoConfig cfg;
        cfg.rng_seed = run_seed;
        if (opts.budget > 0) cfg.eval_budget = opts.budget;
        return evolve_place(sc, cfg).max_cost;
      });
      run_alg(0, "ours", [&] {
        SolverConfig cfg;
        cfg.starts = opts.starts;
        cfg.kkt_tol = opts.kkt_tol;
        cfg.rng_seed = run_seed;
        return solve(build_nlp(sc), cfg).objective;
      });
      run_alg(1, "greedy", [&] {
        GreedyConfig cfg;
        cfg.grid_spacing = opts.grid_spacing;
        return greedy_place(sc, cfg).max_cost;
      });

      const double evo = rows[ti][2].status == "ok" ? rows[ti][2].objective
                                                    : std::numeric_limits<double>::quiet_NaN();
      for (int a = 0; a < 3; ++a)
        rows[ti][a].gap =
            rows[ti][a].status == "ok" && std::isfinite(evo) ? (rows[ti][a].objective - evo) / evo
                                                             : std::numeric_limits<double>::quiet_NaN();
    });

    // deterministic writes: results and summary never contain timings
    std::ofstream results(std::filesystem::path(out_dir) / "results.csv");
    results << "table,n,m,sigma_m,instance,run,seed,resamples,algorithm,objective,gap_vs_evo,status\n";
    for (const auto& triple : rows)
      for (const BenchRow& r : triple) {
        results << r.table << ',' << r.n << ',' << r.m << ',' << fmt(r.sigma_m) << ','
                << r.instance << ',' << r.run << ',' << r.seed << ',' << r.resamples << ','
                << r.algorithm << ',' << (r.status == "ok" ? fmt(r.objective) : "") << ','
                << (r.status == "ok" && std::isfinite(r.gap) ? fmt(r.gap) : "") << ',' << r.status
                << "\n";
      }
    results.close();

    std::map<std::tuple<std::string, int, int, double, std::string>,
             std::pair<std::vector<double>, std::vector<double>>>
        groups;  // -> objectives, gaps
    std::map<std::tuple<std::string, int, int, double, std::string>, std::vector<double>> times;
    for (const auto& triple : rows)
      for (const BenchRow& r : triple) {
        if (r.status != "ok") continue;
        const auto key = std::make_tuple(r.table, r.n, r.m, r.sigma_m, r.algorithm);
        groups[key].first.push_back(r.objective);
        if (std::isfinite(r.gap)) groups[key].second.push_back(r.gap);
        times[key].push_back(r.wall_time);
      }

    std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv");
    summary << "table,n,m,sigma_m,algorithm,rows,median_objective,median_gap_vs_evo\n";
    for (const auto& [key, vals] : groups) {
      const auto& [table, n, m, sig, alg] = key;
      summary << table << ',' << n << ',' << m << ',' << fmt(sig) << ',' << alg << ','
              << vals.first.size() << ',' << fmt(median(vals.first)) << ','
              << fmt(median(vals.second)) << "\n";
    }
    summary.close();

    std::ofstream timing(std::filesystem::path(out_dir) / "timings.csv");
    timing << "table,n,m,sigma_m,algorithm,rows,median_wall_time_s\n";
    for (const auto& [key, vals] : times) {
      const auto& [table, n, m, sig, alg] = key;
      timing << table << ',' << n << ',' << m << ',' << fmt(sig) << ',' << alg << ','
             << vals.size() << ',' << fmt(median(vals)) << "\n";
    }
    timing.close();

    std::cout << "bench: " << tasks.size() << " tasks over " << cells.size() << " cells -> "
              << out_dir << "\n";
    return kExitOk;
  });
}

int cmd_verify_theory(const std::string& scenario_path, const GlobalOptions& opts) {
  return run_guarded([&] {
    const ScenarioFile sf = load_with_seed(scenario_path, opts);
    const Scenario& sc = sf.scenario;
    const int workers = resolve_workers(opts.workers);
    const double prior_var = sc.model.prior_info.inverse().trace() / 3.0;

    struct Line {
      std::string check;
      double eta = 0, zeta = 0;
      long draws = 0, checked = 0, violations = 0, skipped = 0;
      double worst_slack = 0;
      std::string note;
    };
    std::vector<Line> lines;
    long total_violations = 0;

    std::vector<std::pair<double, double>> pairs = {{0.1, 10.0}, {1.0, 100.0}};
    const TheoryParams own = TheoryParams::select_zeta(
        sf.resolved_r_tol(), sc.r_min, std::max(sc.budget, 1), sc.model.sigma_m, sf.eta);
    pairs.emplace_back(own.eta, own.zeta);

    for (const auto& [eta, zeta] : pairs) {
      const TheoryParams p =
          TheoryParams::from_eta_zeta(eta, zeta, sc.r_min, std::max(sc.budget, 1), sc.model.sigma_m);
      const CertificationSummary s =
          certify_sandwich_random(p, prior_var, opts.draws, RNG::derive_seed(sc.seed, 11), workers);
      lines.push_back({"sandwich", eta, p.zeta, opts.draws, s.checked, s.violations, s.skipped,
                       s.worst_slack, ""});
      total_violations += s.violations;
    }

    {
      const CertificationSummary s =
          certify_claim1_random(sf.eta, opts.draws, RNG::derive_seed(sc.seed, 12), workers);
      lines.push_back({"claim1", sf.eta, 0, opts.draws, s.checked, s.violations, s.skipped,
                       s.worst_slack, ""});
      total_violations += s.violations;

      RNG rng(RNG::derive_seed(sc.seed, 13));
      const SimplexAudit a = claim1_simplex_audit(3, 0.8, 0.9, 100000, rng);
      Line l{"claim1_simplex", sf.eta, 0, 100000, 100000, a.ok ? 0 : 1, 0,
             a.one_hot_upper - a.max_sampled_upper, ""};
      lines.push_back(l);
      total_violations += l.violations;
    }

    {
      const TheoryParams p = TheoryParams::from_eta_zeta(sf.eta, own.zeta, sc.r_min,
                                                         std::max(sc.budget, 1), sc.model.sigma_m);
      const CertificationSummary s =
          certify_claim2_random(p, prior_var, opts.draws, RNG::derive_seed(sc.seed, 14), workers);
      lines.push_back({"claim2", sf.eta, p.zeta, opts.draws, s.checked, s.violations, s.skipped,
                       s.worst_slack, ""});
      total_violations += s.violations;
    }

    CorollaryCheck cor;
    if (sc.budget >= 1) {
      SolverConfig scfg;
      scfg.rng_seed = RNG::derive_seed(sc.seed, 15);
      scfg.workers = opts.workers;
      scfg.starts = opts.starts;
      EvoConfig ecfg;
      ecfg.rng_seed = RNG::derive_seed(sc.seed, 16);
      ecfg.workers = opts.workers;
      cor = check_corollary(sc, own, scfg, ecfg);
      Line l{"corollary", own.eta, own.zeta, 1, cor.certified ? 1 : 0,
             (cor.certified && !cor.ok) ? 1 : 0, cor.certified ? 0 : 1, cor.bound - cor.ratio,
             cor.certified ? "" : cor.skipped_reason};
      lines.push_back(l);
      total_violations += l.violations;
    }

    if (opts.selftest_violation) {
      // harness self-test: deliberately mis-signed bound must surface as a
      // violation row and a certification-failure exit
      RNG rng(1);
      const Claim1Check c = check_claim1(std::vector<double>{100.0, 120.0, 130.0}, 0.01, 0.5, rng);
      const bool missigned_ok = c.s * (1.0 + 0.5) <= c.s / (1.0 + 0.5);  // wrong direction
      Line l{"selftest", 0.5, 0, 1, 1, missigned_ok ? 0 : 1, 0, 0.0, "mis-signed bound hook"};
      lines.push_back(l);
      total_violations += l.violations;
    }

    // zeta substitution audit: formula value for the reference inputs next to
    // the figure quoted in print; both land under the cap
    const double formula_sq = TheoryParams::zeta_formula_squared(10.0, 1.0, 10, 1e-2, 0.1);
    const double printed_sq = 2e9;

    const std::filesystem::path out = opts.out.empty() ? "theory_report.json" : opts.out;
    json j;
    j["version"] = 1;
    j["draws"] = opts.draws;
    json checks = json::array();
    for (const Line& l : lines) {
      json e;
      e["check"] = l.check;
      e["eta"] = l.eta;
      if (l.zeta > 0) e["zeta"] = l.zeta;
      e["draws"] = l.draws;
      e["checked"] = l.checked;
      e["violations"] = l.violations;
      e["skipped"] = l.skipped;
      e["worst_slack"] = l.worst_slack;
      if (!l.note.empty()) e["note"] = l.note;
      checks.push_back(e);
    }
    j["checks"] = checks;
    j["zeta_substitution_audit"] = {
        {"inputs", {{"r_tol_over_r_min", 10.0}, {"budget", 10}, {"sigma_m", 1e-2}, {"eta", 0.1}}},
        {"formula_zeta_squared", formula_sq},
        {"printed_zeta_squared", printed_sq},
        {"zeta_cap", TheoryParams::kZetaCap},
        {"formula_zeta_below_cap", std::sqrt(formula_sq) < TheoryParams::kZetaCap},
        {"printed_zeta_below_cap", std::sqrt(printed_sq) < TheoryParams::kZetaCap}};
    if (cor.certified) {
      j["corollary"] = {{"v_delta", cor.v_delta},
                        {"v_zero_at_optimum", cor.v_zero_at_opt},
                        {"v_zero_best_found", cor.v_zero_best},
                        {"ratio", cor.ratio},
                        {"bound", cor.bound}};
    }
    std::ofstream(out) << j.dump(2) << "\n";

    std::ofstream csv(csv_sibling(out));
    csv << "check,eta,zeta,draws,checked,violations,skipped,worst_slack,note\n";
    for (const Line& l : lines)
      csv << l.check << ',' << fmt(l.eta) << ',' << (l.zeta > 0 ? fmt(l.zeta) : "") << ','
          << l.draws << ',' << l.checked << ',' << l.violations << ',' << l.skipped << ','
          << fmt(l.worst_slack) << ',' << l.note << "\n";
    csv << "zeta_audit," << fmt(0.1) << ",," << 1 << ",1,0,0," << fmt(formula_sq) << ","
        << "formula vs printed " << fmt(printed_sq) << "\n";
    csv.close();

    for (const Line& l : lines)
      std::cout << l.check << ": checked " << l.checked << " violations " << l.violations
                << " skipped " << l.skipped << "\n";
    return total_violations == 0 ? kExitOk : kExitCertification;
  });
}

int cmd_simulate(const std::string& scenario_path, const std::string& mission_path,
                 const GlobalOptions& opts) {
  return run_guarded([&] {
    const ScenarioFile sf = load_with_seed(scenario_path, opts);
    MissionFile mf = load_mission(mission_path);
    if (opts.seed) mf.mission.rng_seed = *opts.seed;

    // setpoints along the route decide where placement matters
    Scenario route_sc = sf.scenario;
    route_sc.setpoints = discretize_trajectory(mf.mission.waypoints, mf.setpoint_spacing);
    route_sc.validate();

    std::vector<Vec3> landmarks;
    if (opts.placement_source == "optimized") {
      SolverConfig cfg;
      cfg.starts = opts.starts;
      cfg.kkt_tol = opts.kkt_tol;
      cfg.rng_seed = route_sc.seed;
      cfg.workers = opts.workers;
      landmarks = solve(build_nlp(route_sc), cfg).best.landmarks;
    } else if (opts.placement_source != "none" && opts.placement_source != "random") {
      throw InvalidScenarioError("placement source must be optimized, random or none");
    }

    struct Row {
      std::uint64_t seed;
      DriftReport report;
    };
    std::vector<Row> rows(mf.runs);
    parallel_for(mf.runs, resolve_workers(opts.workers), [&](std::size_t r) {
      Mission mission = mf.mission;
      mission.rng_seed = mf.mission.rng_seed + r;
      std::vector<Vec3> z = landmarks;
      if (opts.placement_source == "random") {
        RNG rng(RNG::derive_seed(mission.rng_seed, 21));
        z.resize(route_sc.budget);
        for (Vec3& zj : z) zj = route_sc.sample_feasible_landmark(rng);
      }
      rows[r] = {mission.rng_seed, run_drift_mission(mission, z, route_sc.model, route_sc.fov)};
    });

    const std::filesystem::path out = opts.out.empty() ? "simulate.csv" : opts.out;
    std::ofstream csv(out);
    csv << "seed,mode,drift_total_m,drift_x,drift_y,drift_z,reduction\n";
    for (const Row& r : rows) {
      const Vec3& d = r.report.drift_components_with;
      csv << r.seed << ',' << opts.placement_source << ',' << fmt(r.report.final_drift_with) << ','
          << fmt(d.x()) << ',' << fmt(d.y()) << ',' << fmt(d.z()) << ','
          << fmt(r.report.drift_reduction) << "\n";
    }
    csv.close();

    std::vector<double> reductions;
    for (const Row& r : rows) reductions.push_back(r.report.drift_reduction);
    std::cout << "simulate: " << mf.runs << " runs, median reduction " << fmt(median(reductions))
              << "\n";
    return kExitOk;
  });
}

int cmd_deriv_check(const GlobalOptions& opts) {
  return run_guarded([&] {
    bool all_ok = true;
    const auto t0 = std::chrono::steady_clock::now();

    // cost derivative audit over random feasible configurations
    for (const auto [n, m] : {std::pair{1, 1}, {4, 2}, {10, 5}}) {
      double worst_grad = 0, worst_hess = 0;
      RNG rng(RNG::derive_seed(opts.seed.value_or(0), 100 + n * 10 + m));
      for (int trial = 0; trial < opts.configs; ++trial) {
        const Vec3 x = rng.normal_vec3(10.0);
        std::vector<Vec3> z(m);
        for (Vec3& zj : z) zj = x + rng.uniform(2.0, 30.0) * rng.unit_vec3();
        const MeasurementModel model =
            MeasurementModel::isotropic(30.0, 0.1, trial % 2 == 0 ? 0.0 : 0.01);
        const DerivBundle b = cost_derivatives(x, z, model);

        Eigen::VectorXd flat(3 * m);
        for (int jdx = 0; jdx < m; ++jdx) flat.segment<3>(3 * jdx) = z[jdx];
        const auto cost_of = [&](const Eigen::VectorXd& f) {
          std::vector<Vec3> zz(m);
          for (int jdx = 0; jdx < m; ++jdx) zz[jdx] = f.segment<3>(3 * jdx);
          return localization_cost(x, zz, model);
        };
        const auto grad_of = [&](const Eigen::VectorXd& f) -> Eigen::VectorXd {
          std::vector<Vec3> zz(m);
          for (int jdx = 0; jdx < m; ++jdx) zz[jdx] = f.segment<3>(3 * jdx);
          return cost_derivatives(x, zz, model).grad;
        };
        worst_grad = std::max(worst_grad, rel_inf_error(b.grad, fd_gradient(cost_of, flat)));
        worst_hess =
            std::max(worst_hess, rel_inf_error(b.hess, fd_jacobian(grad_of, flat, 1e-5)));
      }
      const bool ok = worst_grad <= 1e-5 && worst_hess <= 1e-4;
      all_ok = all_ok && ok;
      std::cout << (ok ? "PASS" : "FAIL") << " cost derivatives (n=" << n << ", m=" << m
                << "): grad " << fmt(worst_grad) << " hess " << fmt(worst_hess) << " over "
                << opts.configs << " configs\n";
    }

    // constraint callback audit, plain and heading-cone instances
    for (int variant = 0; variant < 2; ++variant) {
      Scenario sc;
      RNG srng(RNG::derive_seed(opts.seed.value_or(0), 200 + variant));
      for (int i = 0; i < 4; ++i) sc.setpoints.push_back(srng.in_ball(15.0));
      sc.budget = 2;
      sc.r_min = 2.0;
      sc.r_max = 30.0;
      sc.model = MeasurementModel::isotropic(30.0, 0.1, 0.05);
      sc.seed = variant;
      if (variant == 1) {
        FovSpec fov;
        fov.alpha = 1.5 * M_PI;
        fov.landmark_height = 0.0;
        sc.fov = fov;
        for (Vec3& x : sc.setpoints) x.z() = std::abs(x.z()) + 3.0;
      }
      const NlpInstance nlp = build_nlp(sc);
      RNG rng(RNG::derive_seed(opts.seed.value_or(0), 300 + variant));
      double worst_grad = 0, worst_hess = 0;
      int audited = 0;
      while (audited < 10) {
        std::vector<Vec3> z(sc.budget);
        for (Vec3& zj : z) zj = sc.sample_feasible_landmark(rng);
        std::vector<double> headings(sc.fov ? sc.num_setpoints() : 0);
        bool ok_point = true;
        if (sc.fov) {
          for (int i = 0; i < sc.num_setpoints(); ++i) {
            const auto [phi, res] = best_heading(sc.setpoints[i], z, sc.fov->alpha, sc.model.delta);
            if (res < 1e-4) {
              ok_point = false;
              break;
            }
            headings[i] = phi;
          }
        }
        if (!ok_point) continue;
        double max_cost = 0.0;
        for (int i = 0; i < sc.num_setpoints(); ++i)
          max_cost = std::max(max_cost, localization_cost(sc.setpoints[i], z, sc.model_for(i)));
        const Eigen::VectorXd x0 = nlp.pack(z, headings, 1.2 * max_cost);
        if (nlp.min_residual(x0) < 1e-6) continue;
        ++audited;
        for (int k = 0; k < nlp.num_constraints(); ++k) {
          const auto value_of = [&](const Eigen::VectorXd& xv) { return nlp.constraint_value(k, xv); };
          const auto grad_of = [&](const Eigen::VectorXd& xv) -> Eigen::VectorXd {
            return nlp.constraint_gradient(k, xv);
          };
          worst_grad =
              std::max(worst_grad, rel_inf_error(nlp.constraint_gradient(k, x0), fd_gradient(value_of, x0)));
          worst_hess = std::max(worst_hess, rel_inf_error(Eigen::MatrixXd(nlp.constraint_hessian(k, x0)),
                                                          fd_jacobian(grad_of, x0, 1e-5)));
        }
      }
      const bool ok = worst_grad <= 1e-5 && worst_hess <= 1e-4;
      all_ok = all_ok && ok;
      std::cout << (ok ? "PASS" : "FAIL") << " constraint callbacks ("
                << (variant == 0 ? "plain" : "fov") << "): grad " << fmt(worst_grad) << " hess "
                << fmt(worst_hess) << "\n";
    }

    std::cout << (all_ok ? "PASS" : "FAIL") << " derivative audit in " << fmt(wall_since(t0))
              << " s\n";
    return all_ok ? kExitOk : kExitCertification;
  });
}

}  // namespace lmopt::tool
