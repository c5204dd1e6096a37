#include "lmopt/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "lmopt/parallel.hpp"

namespace lmopt {

void SolverConfig::validate() const {
  if (!(kkt_tol > 0) || !(barrier_init > 0) || !(barrier_floor > 0))
    throw std::invalid_argument("solver config: tolerances must be positive");
  if (!(barrier_shrink > 0) || !(barrier_shrink < 1))
    throw std::invalid_argument("solver config: barrier_shrink must lie in (0,1)");
  if (starts < 1) throw std::invalid_argument("solver config: needs at least one start");
  if (max_newton_iters < 1) throw std::invalid_argument("solver config: max_newton_iters < 1");
}

namespace {

constexpr double kStartSlack = 1e-6;

double start_epigraph_t(double max_cost) { return std::max(1.1 * max_cost, max_cost + 1e-5); }

// k-means (Lloyd) cluster centers of the setpoints, used as the heuristic
// initial landmark arrangement.
std::vector<Vec3> cluster_centers(const Scenario& sc, RNG& rng) {
  const int n = sc.num_setpoints();
  const int m = sc.budget;
  std::vector<Vec3> centers;
  centers.reserve(m);
  if (m >= n) {
    for (int j = 0; j < m; ++j)
      centers.push_back(sc.setpoints[j % n] + rng.normal_vec3(0.05 * sc.r_min));
    return centers;
  }
  // k-means++ seeding
  centers.push_back(sc.setpoints[rng.uniform_index(n)]);
  while (static_cast<int>(centers.size()) < m) {
    std::vector<double> d2(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& c : centers) best = std::min(best, (sc.setpoints[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    double pick = rng.uniform01() * total;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      pick -= d2[i];
      if (pick <= 0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(sc.setpoints[chosen]);
  }
  for (int iter = 0; iter < 20; ++iter) {
    std::vector<Vec3> sums(m, Vec3::Zero());
    std::vector<int> counts(m, 0);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int j = 0; j < m; ++j) {
        const double d = (sc.setpoints[i] - centers[j]).squaredNorm();
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      sums[best] += sc.setpoints[i];
      counts[best] += 1;
    }
    for (int j = 0; j < m; ++j) {
      if (counts[j] > 0)
        centers[j] = sums[j] / counts[j];
      else
        centers[j] = sc.setpoints[rng.uniform_index(n)] + rng.normal_vec3(0.05 * sc.r_min);
    }
  }
  return centers;
}

// Pushes a candidate landmark out of every setpoint's separation ball and
// back into the placement region.
bool repair_landmark(const Scenario& sc, RNG& rng, Vec3& z) {
  const double target = 1.1 * sc.r_min;
  if (sc.planar()) z.z() = sc.landmark_height();
  for (int iter = 0; iter < 200; ++iter) {
    bool moved = false;
    for (const Vec3& x : sc.setpoints) {
      Vec3 d = z - x;
      if (sc.planar()) d.z() = 0.0;  // keep the landmark on its plane
      const double dist = (z - x).norm();
      if (dist < target) {
        Vec3 dir = d;
        if (dir.norm() < 1e-9) dir = sc.planar() ? Vec3(rng.normal(), rng.normal(), 0.0) : rng.unit_vec3();
        dir.normalize();
        // move in-plane until the full 3d separation is met
        const double dz2 = sc.planar() ? (sc.landmark_height() - x.z()) * (sc.landmark_height() - x.z()) : 0.0;
        if (dz2 >= target * target) break;  // plane offset alone satisfies it
        const double horiz = std::sqrt(target * target - dz2);
        if (sc.planar())
          z = Vec3(x.x(), x.y(), sc.landmark_height()) + horiz * dir;
        else
          z = x + target * dir;
        moved = true;
      }
    }
    const double rnorm = sc.planar() ? z.head<2>().norm() : z.norm();
    if (rnorm > 0.999 * sc.r_max) {
      const double s = 0.999 * sc.r_max / rnorm;
      z.head<2>() *= s;
      if (!sc.planar()) z.z() *= s;
      moved = true;
    }
    if (!moved && sc.landmark_feasible(z, kStartSlack)) return true;
  }
  return sc.landmark_feasible(z, kStartSlack);
}

}  // namespace

std::vector<Eigen::VectorXd> initialize_starts(const NlpInstance& nlp, int k, RNG& rng) {
  const Scenario& sc = nlp.scenario();
  std::vector<Eigen::VectorXd> starts;
  starts.reserve(k);
  long attempts = 0;
  const long max_attempts = 100000;

  const auto finish_start = [&](std::vector<Vec3> z) -> bool {
    std::vector<double> headings;
    if (sc.fov) {
      headings.resize(sc.num_setpoints());
      for (int i = 0; i < sc.num_setpoints(); ++i) {
        const auto [phi, res] = best_heading(sc.setpoints[i], z, sc.fov->alpha, sc.model.delta);
        if (res < kStartSlack) return false;
        headings[i] = phi;
      }
    }
    double max_cost = 0.0;
    for (int i = 0; i < sc.num_setpoints(); ++i)
      max_cost = std::max(max_cost, localization_cost(sc.setpoints[i], z, sc.model_for(i)));
    const Eigen::VectorXd x = nlp.pack(z, headings, start_epigraph_t(max_cost));
    if (nlp.min_residual(x) < kStartSlack) return false;
    starts.push_back(x);
    return true;
  };

  // heuristic start
  {
    std::vector<Vec3> z = cluster_centers(sc, rng);
    bool ok = true;
    for (Vec3& zj : z) ok = ok && repair_landmark(sc, rng, zj);
    if (!ok || !finish_start(std::move(z))) {
      // fall back to a sampled start in its place
      while (static_cast<int>(starts.size()) < 1) {
        if (++attempts > max_attempts)
          throw InfeasibleScenarioError("initialize_starts: no strictly feasible start found");
        std::vector<Vec3> zs(sc.budget);
        for (Vec3& zj : zs) zj = sc.sample_feasible_landmark(rng);
        finish_start(std::move(zs));
      }
    }
  }

  while (static_cast<int>(starts.size()) < k) {
    if (++attempts > max_attempts)
      throw InfeasibleScenarioError("initialize_starts: no strictly feasible start found");
    std::vector<Vec3> z(sc.budget);
    for (Vec3& zj : z) zj = sc.sample_feasible_landmark(rng);
    finish_start(std::move(z));
  }
  return starts;
}

namespace {

struct StartOutcome {
  Eigen::VectorXd x;
  bool converged = false;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double complementarity = 0.0;
  long newton_iters = 0;
  std::string note;
};

// Stationarity certificate with least-squares multipliers on the active set.
// The raw barrier gradient at the floor mu sits at the rounding noise of
// t - cost, so it cannot certify tight tolerances; fitted multipliers can.
void certify_kkt(const NlpInstance& nlp, const Eigen::VectorXd& x, StartOutcome* out) {
  Eigen::VectorXd c;
  nlp.barrier(x, 0.0, nullptr, nullptr, nullptr, &c);
  const double scale = 1.0 + std::abs(x[nlp.t_index()]);
  std::vector<int> active;
  for (int k = 0; k < nlp.num_constraints(); ++k)
    if (c[k] <= 1e-4 * scale) active.push_back(k);

  const Eigen::VectorXd grad_f = nlp.objective_gradient();
  Eigen::VectorXd residual = grad_f;
  Eigen::VectorXd nu;
  while (!active.empty()) {
    Eigen::MatrixXd g(nlp.dimension(), active.size());
    for (std::size_t a = 0; a < active.size(); ++a) g.col(a) = nlp.constraint_gradient(active[a], x);
    nu = g.colPivHouseholderQr().solve(grad_f);
    int worst = -1;
    double most_negative = -1e-12;
    for (int a = 0; a < nu.size(); ++a)
      if (nu[a] < most_negative) {
        most_negative = nu[a];
        worst = a;
      }
    if (worst < 0) {
      residual = grad_f - g * nu;
      break;
    }
    active.erase(active.begin() + worst);
  }
  out->kkt_residual = residual.lpNorm<Eigen::Infinity>();
  out->complementarity = 0.0;
  for (std::size_t a = 0; a < active.size(); ++a)
    out->complementarity = std::max(out->complementarity, std::abs(nu[a] * c[active[a]]));
}

StartOutcome run_barrier(const NlpInstance& nlp, const Eigen::VectorXd& x0,
                         const SolverConfig& cfg, int start_index) {
  StartOutcome out;
  Eigen::VectorXd x = x0;
  const int dim = nlp.dimension();
  Eigen::VectorXd g(dim);
  Eigen::MatrixXd h(dim, dim);
  double value = 0.0;
  std::string stall;

  double mu = cfg.barrier_init;
  for (;;) {
    const bool final_stage = mu <= cfg.barrier_floor * (1 + 1e-12);
    const double stage_tol = final_stage ? cfg.kkt_tol : std::max(cfg.kkt_tol, mu);

    double last_step = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_newton_iters; ++it) {
      if (!nlp.barrier(x, mu, &value, &g, &h)) {
        out.note = "iterate left the interior";
        return out;
      }
      if (g.lpNorm<Eigen::Infinity>() <= stage_tol) break;
      if (last_step <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) break;  // rounding floor

      // Newton direction with Levenberg regularization; lambda doubles until
      // the system is positive definite and the step makes progress.
      double lambda = 0.0;
      bool stepped = false;
      while (lambda <= 1e12) {
        Eigen::MatrixXd hreg = h;
        if (lambda > 0) hreg.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(hreg);
        if (llt.info() == Eigen::Success) {
          const Eigen::VectorXd p = llt.solve(-g);
          const double slope = g.dot(p);
          if (p.allFinite() && slope < 0) {
            double alpha = 1.0;
            while (alpha > 1e-16) {
              const Eigen::VectorXd xt = x + alpha * p;
              double vt;
              if (nlp.barrier(xt, mu, &vt, nullptr, nullptr) &&
                  vt <= value + cfg.armijo_c * alpha * slope && std::isfinite(vt)) {
                x = xt;
                stepped = true;
                last_step = alpha * p.lpNorm<Eigen::Infinity>();
                if (cfg.merit_observer) cfg.merit_observer(start_index, mu, vt);
                break;
              }
              alpha *= cfg.backtrack_shrink;
            }
            if (stepped) break;
          }
        }
        lambda = lambda == 0.0 ? 1e-10 : 2.0 * lambda;
      }
      if (!stepped) {
        stall = "newton stalled at mu=" + std::to_string(mu);
        break;
      }
      ++out.newton_iters;
    }

    if (final_stage) break;
    mu = std::max(cfg.barrier_floor, mu * cfg.barrier_shrink);
  }

  if (!nlp.barrier(x, cfg.barrier_floor, &value, &g, nullptr)) {
    out.note = "final iterate infeasible";
    return out;
  }
  out.x = x;
  certify_kkt(nlp, x, &out);
  out.converged =
      out.kkt_residual <= cfg.kkt_tol && out.complementarity <= 10.0 * cfg.barrier_floor;
  out.note = out.converged ? "converged" : (stall.empty() ? "kkt tolerance not met" : stall);
  return out;
}

}  // namespace

double matching_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  const int n = static_cast<int>(a.size());
  if (n != static_cast<int>(b.size()))
    return std::numeric_limits<double>::infinity();
  if (n == 0) return 0.0;
  Eigen::MatrixXd d(n, n);
  std::vector<double> values;
  values.reserve(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      d(i, j) = (a[i] - b[j]).norm();
      values.push_back(d(i, j));
    }
  std::sort(values.begin(), values.end());

  // Smallest threshold admitting a perfect matching (Kuhn's algorithm).
  const auto feasible = [&](double thr) {
    std::vector<int> match_to(n, -1);
    std::vector<char> visited(n);
    std::function<bool(int)> try_match = [&](int i) {
      for (int j = 0; j < n; ++j) {
        if (d(i, j) <= thr && !visited[j]) {
          visited[j] = 1;
          if (match_to[j] < 0 || try_match(match_to[j])) {
            match_to[j] = i;
            return true;
          }
        }
      }
      return false;
    };
    for (int i = 0; i < n; ++i) {
      std::fill(visited.begin(), visited.end(), 0);
      if (!try_match(i)) return false;
    }
    return true;
  };

  int lo = 0, hi = static_cast<int>(values.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (feasible(values[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return values[lo];
}

SolveReport solve(const NlpInstance& nlp, const SolverConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario& sc = nlp.scenario();

  RNG rng(cfg.rng_seed);
  const std::vector<Eigen::VectorXd> starts = initialize_starts(nlp, cfg.starts, rng);

  std::vector<StartOutcome> outcomes(starts.size());
  parallel_for(starts.size(), resolve_workers(cfg.workers), [&](std::size_t i) {
    outcomes[i] = run_barrier(nlp, starts[i], cfg, static_cast<int>(i));
  });

  SolveReport report;
  std::vector<std::pair<Placement, int>> converged;  // placement, start index
  std::vector<double> kkts;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const StartOutcome& o = outcomes[i];
    report.newton_iterations_total += o.newton_iters;
    if (o.converged) {
      Placement p = evaluate_placement(sc, nlp.landmarks_from(o.x));
      if (sc.fov) {
        const auto phis = nlp.headings_from(o.x);
        for (int s = 0; s < sc.num_setpoints(); ++s)
          p.headings[s] = {std::cos(phis[s]), std::sin(phis[s])};
      }
      report.trace.push_back("start " + std::to_string(i) + ": converged, objective " +
                             std::to_string(p.max_cost) + ", kkt " + std::to_string(o.kkt_residual));
      converged.emplace_back(std::move(p), static_cast<int>(i));
      kkts.push_back(o.kkt_residual);
      ++report.starts_converged;
    } else {
      report.trace.push_back("start " + std::to_string(i) + ": " + o.note);
    }
  }
  if (converged.empty())
    throw NonConvergenceError("solve: no start converged to a KKT point", report.trace);

  // Group converged results into distinct local minima (bottleneck matching
  // distance above 0.5 m); within a group the first start of an objective tie
  // (1e-8) wins.
  for (std::size_t ci = 0; ci < converged.size(); ++ci) {
    const auto& [p, idx] = converged[ci];
    bool placed = false;
    for (LocalMinimum& lm : report.distinct_local_minima) {
      if (matching_distance(p.landmarks, lm.placement.landmarks) <= 0.5) {
        if (p.max_cost < lm.objective - 1e-8) {
          lm.placement = p;
          lm.objective = p.max_cost;
          lm.kkt_residual = kkts[ci];
          lm.start_index = idx;
        }
        placed = true;
        break;
      }
    }
    if (!placed) {
      LocalMinimum lm;
      lm.placement = p;
      lm.objective = p.max_cost;
      lm.kkt_residual = kkts[ci];
      lm.start_index = idx;
      report.distinct_local_minima.push_back(std::move(lm));
    }
  }
  std::stable_sort(report.distinct_local_minima.begin(), report.distinct_local_minima.end(),
                   [](const LocalMinimum& a, const LocalMinimum& b) {
                     if (std::abs(a.objective - b.objective) > 1e-8) return a.objective < b.objective;
                     return a.start_index < b.start_index;
                   });

  const LocalMinimum& best = report.distinct_local_minima.front();
  report.best = best.placement;
  report.objective = best.objective;
  report.kkt_residual = best.kkt_residual;

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace lmopt
