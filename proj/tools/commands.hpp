#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lmopt::tool {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;  // overrides the file seed
  std::string out;
  int starts = 10;
  double kkt_tol = 1e-6;
  double grid_spacing = 0.0;  // 0: r_max / 20
  long budget = 0;            // evolutionary evaluation budget; 0: default
  int workers = 0;            // 0: auto; LANDMARK_OPT_WORKERS overrides
  int draws = 1000;           // verify-theory certification draws
  int configs = 100;          // deriv-check configurations per size
  bool selftest_violation = false;
  std::string placement_source = "optimized";  // simulate: optimized|random|none
};

// exit codes: 0 ok, 1 input error, 2 infeasible, 3 non-convergence,
// 4 certification failure
int cmd_solve(const std::string& scenario_path, const GlobalOptions& opts);
int cmd_greedy(const std::string& scenario_path, const GlobalOptions& opts);
int cmd_evolve(const std::string& scenario_path, const GlobalOptions& opts);
int cmd_bench(const std::string& spec_path, const std::string& out_dir, const GlobalOptions& opts);
int cmd_verify_theory(const std::string& scenario_path, const GlobalOptions& opts);
int cmd_simulate(const std::string& scenario_path, const std::string& mission_path,
                 const GlobalOptions& opts);
int cmd_deriv_check(const GlobalOptions& opts);

}  // namespace lmopt::tool
