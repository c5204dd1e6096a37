#include "lmopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmopt/nlp.hpp"
#include "lmopt/parallel.hpp"
#include "lmopt/rng.hpp"

namespace lmopt {

namespace {

// Candidate heading test used by greedy in FOV mode: does some heading see
// every landmark? Exact via arc endpoints (the intersection of circular arcs,
// when nonempty, is bounded by endpoints of the inputs).
bool heading_exists(const Vec3& x, std::span<const Vec3> landmarks, double alpha, double delta) {
  if (landmarks.empty()) return true;
  std::vector<double> candidates;
  candidates.reserve(3 * landmarks.size());
  const double ca = std::cos(alpha / 2.0);
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
  for (double phi : candidates) {
    bool all = true;
    for (const Vec3& z : landmarks)
      if (fov_residual(phi, x, z, alpha, delta) < -1e-12) {
        all = false;
        break;
      }
    if (all) return true;
  }
  return false;
}

std::vector<Vec3> build_grid(const Scenario& sc, double h, bool boundary_shell) {
  std::vector<Vec3> pts;
  const double r = sc.r_max;
  const int half = static_cast<int>(std::floor(r / h));
  if (sc.planar()) {
    const double z = sc.landmark_height();
    for (int ix = -half; ix <= half; ++ix)
      for (int iy = -half; iy <= half; ++iy) {
        const Vec3 p(ix * h, iy * h, z);
        if (p.head<2>().norm() <= r) pts.push_back(p);
      }
    if (boundary_shell) {
      const int nshell = std::max(8, static_cast<int>(std::round(2.0 * M_PI * r / h)));
      for (int k = 0; k < nshell; ++k) {
        const double a = 2.0 * M_PI * k / nshell;
        pts.emplace_back(r * std::cos(a), r * std::sin(a), z);
      }
    }
  } else {
    for (int ix = -half; ix <= half; ++ix)
      for (int iy = -half; iy <= half; ++iy)
        for (int iz = -half; iz <= half; ++iz) {
          const Vec3 p(ix * h, iy * h, iz * h);
          if (p.norm() <= r) pts.push_back(p);
        }
    if (boundary_shell) {
      // Fibonacci sphere at roughly the grid's surface density.
      const int nshell = std::max(16, static_cast<int>(std::round(4.0 * M_PI * r * r / (h * h))));
      const double golden = M_PI * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < nshell; ++k) {
        const double y = 1.0 - 2.0 * (k + 0.5) / nshell;
        const double rho = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double a = golden * k;
        pts.emplace_back(r * rho * std::cos(a), r * y, r * rho * std::sin(a));
      }
    }
  }
  return pts;
}

}  // namespace

Placement greedy_place(const Scenario& scenario, const GreedyConfig& cfg) {
  scenario.validate();
  const double h = cfg.grid_spacing > 0 ? cfg.grid_spacing : scenario.r_max / 20.0;
  const double w = 1.0 / (scenario.model.sigma_m * scenario.model.sigma_m);
  const int n = scenario.num_setpoints();

  std::vector<Vec3> grid;
  for (const Vec3& p : build_grid(scenario, h, cfg.include_boundary_shell)) {
    bool ok = true;
    for (const Vec3& x : scenario.setpoints)
      if ((p - x).norm() < scenario.r_min) {
        ok = false;
        break;
      }
    ok = ok && (scenario.planar() ? p.head<2>().norm() : p.norm()) <= scenario.r_max;
    if (ok) grid.push_back(p);
  }
  if (static_cast<int>(grid.size()) < scenario.budget)
    throw InfeasibleScenarioError("greedy_place: fewer feasible grid points than landmarks");

  std::vector<SymMat3> info(n);
  for (int i = 0; i < n; ++i) info[i] = scenario.prior_info(i);
  std::vector<Vec3> chosen;
  std::vector<char> used(grid.size(), 0);
  const int workers = resolve_workers(cfg.workers);

  for (int step = 0; step < scenario.budget; ++step) {
    // one-step objective per candidate (infinity when excluded)
    std::vector<double> score(grid.size(), std::numeric_limits<double>::infinity());
    parallel_for(grid.size(), workers, [&](std::size_t gi) {
      if (used[gi]) return;
      const Vec3& p = grid[gi];
      if (scenario.fov) {
        std::vector<Vec3> with = chosen;
        with.push_back(p);
        for (const Vec3& x : scenario.setpoints)
          if (!heading_exists(x, with, scenario.fov->alpha, scenario.model.delta)) return;
      }
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        const SymMat3 ji =
            info[i] + w * pair_info(scenario.setpoints[i], p, scenario.model.delta);
        worst = std::max(worst, ji.inverse().trace());
      }
      score[gi] = worst;
    });

    std::size_t best = grid.size();
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      if (score[gi] < best_score) {
        best_score = score[gi];
        best = gi;
      }
    }
    if (best == grid.size())
      throw InfeasibleScenarioError("greedy_place: no admissible grid point at step " +
                                    std::to_string(step));
    used[best] = 1;
    chosen.push_back(grid[best]);
    for (int i = 0; i < n; ++i)
      info[i] += w * pair_info(scenario.setpoints[i], grid[best], scenario.model.delta);
  }

  return evaluate_placement(scenario, chosen);
}

namespace {

struct Fitness {
  double objective = std::numeric_limits<double>::infinity();
  double violation = std::numeric_limits<double>::infinity();
};

Fitness evaluate_individual(const Scenario& sc, const Eigen::VectorXd& coords) {
  const int cpl = sc.planar() ? 2 : 3;
  const int m = sc.budget;
  std::vector<Vec3> z(m);
  for (int j = 0; j < m; ++j) {
    if (cpl == 2)
      z[j] = {coords[2 * j], coords[2 * j + 1], sc.landmark_height()};
    else
      z[j] = {coords[3 * j], coords[3 * j + 1], coords[3 * j + 2]};
  }

  Fitness f;
  f.violation = 0.0;
  for (const Vec3& zj : z) {
    const double r2 = sc.planar() ? zj.head<2>().squaredNorm() : zj.squaredNorm();
    f.violation += std::max(0.0, r2 - sc.r_max * sc.r_max);
    for (const Vec3& x : sc.setpoints)
      f.violation += std::max(0.0, sc.r_min * sc.r_min - (zj - x).squaredNorm());
  }
  if (sc.fov) {
    for (const Vec3& x : sc.setpoints) {
      const auto [phi, res] = best_heading(x, z, sc.fov->alpha, sc.model.delta);
      (void)phi;
      f.violation += std::max(0.0, -res);
    }
  }

  try {
    double worst = 0.0;
    for (int i = 0; i < sc.num_setpoints(); ++i)
      worst = std::max(worst, localization_cost(sc.setpoints[i], z, sc.model_for(i)));
    f.objective = worst;
  } catch (const DegenerateGeometryError&) {
    f.objective = std::numeric_limits<double>::infinity();
  }
  return f;
}

}  // namespace

Placement evolve_place(const Scenario& scenario, const EvoConfig& cfg) {
  scenario.validate();
  const int cpl = scenario.planar() ? 2 : 3;
  const int d = cpl * scenario.budget;
  const int lambda = cfg.population > 0 ? cfg.population : std::max(4, 15 * d);
  if (lambda < 4) throw std::invalid_argument("evolve_place: population must be at least 4");
  const int mu = std::max(1, lambda / 7);
  const long budget =
      cfg.eval_budget > 0 ? cfg.eval_budget : static_cast<long>(lambda) * cfg.generations;
  if (budget < lambda) throw std::invalid_argument("evolve_place: budget below one generation");
  const double tau_global = 1.0 / std::sqrt(2.0 * d);
  const double tau_local = 1.0 / std::sqrt(2.0 * std::sqrt(static_cast<double>(d)));
  const double sigma_init = cfg.init_step_frac * scenario.r_max;
  const double sigma_min = 1e-5 * scenario.r_max, sigma_max = scenario.r_max;

  RNG rng(cfg.rng_seed);
  const int workers = resolve_workers(cfg.workers);

  struct Individual {
    Eigen::VectorXd x, sigma;
    Fitness fit;
  };
  std::vector<Individual> pop(lambda);
  for (int k = 0; k < lambda; ++k) {
    pop[k].x = Eigen::VectorXd(d);
    pop[k].sigma = Eigen::VectorXd::Constant(d, sigma_init);
    if (k == 0) {
      // one rejection-sampled feasible seed so a feasible lineage exists
      for (int j = 0; j < scenario.budget; ++j) {
        const Vec3 z = scenario.sample_feasible_landmark(rng);
        for (int c = 0; c < cpl; ++c) pop[k].x[cpl * j + c] = z[c];
      }
    } else {
      for (int i = 0; i < d; ++i) pop[k].x[i] = rng.uniform(-scenario.r_max, scenario.r_max);
    }
  }

  bool have_elite = false;
  Eigen::VectorXd elite_x;
  double elite_obj = std::numeric_limits<double>::infinity();

  long evals = 0;
  int generation = 0;
  while (evals + lambda <= budget && generation < cfg.generations) {
    parallel_for(pop.size(), workers,
                 [&](std::size_t k) { pop[k].fit = evaluate_individual(scenario, pop[k].x); });
    evals += lambda;
    ++generation;

    for (const Individual& ind : pop) {
      if (ind.fit.violation == 0.0 && ind.fit.objective < elite_obj) {
        elite_obj = ind.fit.objective;
        elite_x = ind.x;
        have_elite = true;
      }
    }

    // stochastic ranking: bubble sweeps comparing by objective with
    // probability p_f when a constraint is violated, by violation otherwise
    std::vector<int> order(lambda);
    for (int i = 0; i < lambda; ++i) order[i] = i;
    for (int sweep = 0; sweep < lambda; ++sweep) {
      bool swapped = false;
      for (int i = 0; i + 1 < lambda; ++i) {
        const Fitness& a = pop[order[i]].fit;
        const Fitness& b = pop[order[i + 1]].fit;
        const bool both_feasible = a.violation == 0.0 && b.violation == 0.0;
        bool swap;
        if (both_feasible || rng.uniform01() < cfg.p_f)
          swap = a.objective > b.objective;
        else
          swap = a.violation > b.violation;
        if (swap) {
          std::swap(order[i], order[i + 1]);
          swapped = true;
        }
      }
      if (!swapped) break;
    }

    // (mu, lambda) selection with log-normal step-size self-adaptation
    std::vector<Individual> next(lambda);
    for (int k = 0; k < lambda; ++k) {
      const Individual& parent = pop[order[k % mu]];
      Individual child;
      child.x = Eigen::VectorXd(d);
      child.sigma = Eigen::VectorXd(d);
      const double g = tau_global * rng.normal();
      for (int i = 0; i < d; ++i) {
        child.sigma[i] = std::clamp(parent.sigma[i] * std::exp(g + tau_local * rng.normal()),
                                    sigma_min, sigma_max);
        child.x[i] = std::clamp(parent.x[i] + child.sigma[i] * rng.normal(), -scenario.r_max,
                                scenario.r_max);
      }
      next[k] = std::move(child);
    }
    pop = std::move(next);
  }

  if (!have_elite)
    throw InfeasibleScenarioError("evolve_place: no feasible individual found within budget");

  std::vector<Vec3> z(scenario.budget);
  for (int j = 0; j < scenario.budget; ++j) {
    if (cpl == 2)
      z[j] = {elite_x[2 * j], elite_x[2 * j + 1], scenario.landmark_height()};
    else
      z[j] = {elite_x[3 * j], elite_x[3 * j + 1], elite_x[3 * j + 2]};
  }
  return evaluate_placement(scenario, z);
}

}  // namespace lmopt
