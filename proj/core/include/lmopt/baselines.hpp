#pragma once

#include <cstdint>

#include "lmopt/scenario.hpp"

namespace lmopt {

struct GreedyConfig {
  double grid_spacing = 0.0;         // 0 resolves to r_max / 20
  bool include_boundary_shell = true;
  int workers = 1;
};

/// Sequentially picks landmarks from a feasible grid, each time taking the
/// point that most decreases the worst-case cost. Ties break toward the
/// lowest grid index.
Placement greedy_place(const Scenario& scenario, const GreedyConfig& cfg = {});

struct EvoConfig {
  int population = 0;       // lambda; 0 resolves to 15 * landmark coordinate count
  int generations = 200;
  long eval_budget = 0;     // 0 resolves to population * generations
  double p_f = 0.45;        // probability of objective-based comparison when infeasible
  double init_step_frac = 0.25;  // initial mutation std as a fraction of r_max
  std::uint64_t rng_seed = 0;
  int workers = 1;
};

/// (mu, lambda) evolution strategy with stochastic ranking on the constraint
/// violation and an elite archive of the best feasible individual.
Placement evolve_place(const Scenario& scenario, const EvoConfig& cfg = {});

}  // namespace lmopt
