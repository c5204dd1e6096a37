#include <CLI11.hpp>

#include "commands.hpp"

using lmopt::tool::GlobalOptions;

int main(int argc, char** argv) {
  CLI::App app{"worst-case landmark placement: solvers, baselines, certification, simulation"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::uint64_t seed_value = 0;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_value, "override the document seed")
        ->each([&](const std::string&) { opts.seed = seed_value; });
    cmd->add_option("--out", opts.out, "output path (reports also write a .csv sibling)");
    cmd->add_option("--workers", opts.workers,
                    "worker threads (0 = auto; LANDMARK_OPT_WORKERS overrides)");
  };

  std::string scenario_path, mission_path, spec_path, out_dir;

  CLI::App* solve = app.add_subcommand("solve", "interior-point placement solve");
  solve->add_option("scenario", scenario_path, "scenario document")->required();
  solve->add_option("--starts", opts.starts, "multi-start count");
  solve->add_option("--kkt-tol", opts.kkt_tol, "stationarity tolerance");
  add_common(solve);

  CLI::App* greedy = app.add_subcommand("greedy", "grid-greedy baseline");
  greedy->add_option("scenario", scenario_path, "scenario document")->required();
  greedy->add_option("--grid-spacing", opts.grid_spacing, "grid spacing in meters (0 = r_max/20)");
  add_common(greedy);

  CLI::App* evolve = app.add_subcommand("evolve", "evolution-strategy baseline");
  evolve->add_option("scenario", scenario_path, "scenario document")->required();
  evolve->add_option("--budget", opts.budget, "objective evaluation budget");
  add_common(evolve);

  CLI::App* bench = app.add_subcommand("bench", "run the benchmark table sweeps");
  bench->add_option("spec", spec_path, "bench spec document")->required();
  bench->add_option("out_dir", out_dir, "output directory")->required();
  bench->add_option("--starts", opts.starts, "multi-start count");
  bench->add_option("--kkt-tol", opts.kkt_tol, "stationarity tolerance");
  bench->add_option("--grid-spacing", opts.grid_spacing, "greedy grid spacing");
  bench->add_option("--budget", opts.budget, "evolutionary evaluation budget");
  add_common(bench);

  CLI::App* verify = app.add_subcommand("verify-theory", "randomized certification of the bounds");
  verify->add_option("scenario", scenario_path, "scenario document")->required();
  verify->add_option("--draws", opts.draws, "certification draws per check");
  verify->add_option("--starts", opts.starts, "solver starts for the end-to-end check");
  verify->add_flag("--selftest-violation", opts.selftest_violation,
                   "inject a mis-signed bound to exercise the failure path");
  add_common(verify);

  CLI::App* simulate = app.add_subcommand("simulate", "drift missions with bearing corrections");
  simulate->add_option("scenario", scenario_path, "scenario document")->required();
  simulate->add_option("mission", mission_path, "mission document")->required();
  simulate
      ->add_option("--placement", opts.placement_source,
                   "landmark source: optimized, random or none")
      ->check(CLI::IsMember({"optimized", "random", "none"}));
  simulate->add_option("--starts", opts.starts, "solver starts for optimized placement");
  simulate->add_option("--kkt-tol", opts.kkt_tol, "stationarity tolerance");
  add_common(simulate);

  CLI::App* deriv = app.add_subcommand("deriv-check", "finite-difference derivative audits");
  deriv->add_option("--configs", opts.configs, "configurations per problem size");
  add_common(deriv);

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return lmopt::tool::cmd_solve(scenario_path, opts);
  if (greedy->parsed()) return lmopt::tool::cmd_greedy(scenario_path, opts);
  if (evolve->parsed()) return lmopt::tool::cmd_evolve(scenario_path, opts);
  if (bench->parsed()) return lmopt::tool::cmd_bench(spec_path, out_dir, opts);
  if (verify->parsed()) return lmopt::tool::cmd_verify_theory(scenario_path, opts);
  if (simulate->parsed()) return lmopt::tool::cmd_simulate(scenario_path, mission_path, opts);
  if (deriv->parsed()) return lmopt::tool::cmd_deriv_check(opts);
  return 1;
}
