#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lmopt/nlp.hpp"

namespace lmopt {

struct SolverConfig {
  double kkt_tol = 1e-6;
  double barrier_init = 1.0;       // initial barrier parameter
  double barrier_shrink = 0.1;     // per-stage multiplier, in (0,1)
  double barrier_floor = 1e-9;     // final barrier parameter
  int max_newton_iters = 50;       // per barrier stage
  int starts = 10;
  double armijo_c = 1e-4;
  double backtrack_shrink = 0.5;
  std::uint64_t rng_seed = 0;
  int workers = 1;

  /// Test hook: observes (start index, barrier mu, merit value) after every
  /// accepted Newton step. Runs on worker threads; leave empty outside tests.
  std::function<void(int, double, double)> merit_observer;

  void validate() const;
};

struct LocalMinimum {
  Placement placement;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int start_index = -1;
};

struct SolveReport {
  Placement best;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int starts_converged = 0;
  std::vector<LocalMinimum> distinct_local_minima;  // sorted by objective
  double wall_time_s = 0.0;
  long newton_iterations_total = 0;
  std::vector<std::string> trace;  // one line per start
};

/// Strictly feasible starting decision vectors: one heuristic start built
/// from clustered setpoints, then k-1 rejection-sampled ones. Deterministic
/// for a given rng state.
std::vector<Eigen::VectorXd> initialize_starts(const NlpInstance& nlp, int k, RNG& rng);

/// Multi-start log-barrier Newton solve of the instance. Throws
/// InfeasibleScenarioError when no strictly feasible start can be built and
/// NonConvergenceError (with per-start traces) when every start fails.
SolveReport solve(const NlpInstance& nlp, const SolverConfig& cfg = {});

/// Bottleneck matching distance between two landmark sets of equal size:
/// min over pairings of the largest pair distance. Used to decide whether two
/// local minima are distinct (threshold 0.5 m).
double matching_distance(std::span<const Vec3> a, std::span<const Vec3> b);

}  // namespace lmopt
