#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "lmopt/scenario.hpp"
#include "lmopt/sim.hpp"
#include "lmopt/solver.hpp"
#include "lmopt/theory.hpp"

namespace lmopt::tool {

/// Scenario document plus the fields that only matter at the file level.
struct ScenarioFile {
  Scenario scenario;
  bool delta_auto = false;          // "delta": "auto" resolved through the theory rule
  double eta = 0.1;
  double r_tol = 0.0;               // 0 resolves to 10 * r_min
  std::optional<TheoryParams> resolved;  // present when delta_auto

  double resolved_r_tol() const { return r_tol > 0.0 ? r_tol : 10.0 * scenario.r_min; }
};

/// Parses and validates a scenario document. Throws InvalidScenarioError with
/// a field/position diagnostic on malformed input.
ScenarioFile load_scenario(const std::filesystem::path& path);

struct MissionFile {
  Mission mission;
  int runs = 1;
  double setpoint_spacing = 10.0;  // spacing used when deriving setpoints from the route
};

MissionFile load_mission(const std::filesystem::path& path);

struct BenchSpec {
  std::vector<int> n_list = {5, 10, 20};
  std::vector<int> m_list = {2, 5, 10};
  int instances = 10;
  int runs = 10;
  double sphere_radius = 40.0;
  std::vector<double> noise_sigma_list = {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
  int noise_n = 10;
  int noise_m = 5;
  double r_min = 2.0;
  double r_max = 60.0;
  double sigma_m = 0.1;
  double prior_variance = 30.0;
  std::uint64_t seed = 1;
  bool table_size = true;   // team-size sweep
  bool table_noise = true;  // noise sweep
  bool table_time = true;   // timing sweep
};

BenchSpec load_bench_spec(const std::filesystem::path& path);

/// Placement document writer; the JSON carries landmarks, headings (FOV),
/// costs, solver diagnostics and wall time. The sibling CSV holds the
/// deterministic subset only.
void write_placement_json(const std::filesystem::path& path, const ScenarioFile& sf,
                          const Placement& placement, const std::string& algorithm,
                          double kkt_residual, int starts_converged,
                          const std::vector<LocalMinimum>& minima, double wall_time_s);

void write_placement_csv(const std::filesystem::path& path, const Placement& placement,
                         double kkt_residual);

/// Reads the landmark list back from a placement JSON document.
std::vector<Vec3> read_placement_landmarks(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const ScenarioFile& sf);

}  // namespace lmopt::tool
