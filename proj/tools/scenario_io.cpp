#include "scenario_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace lmopt::tool {

using nlohmann::json;

namespace {

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidScenarioError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidScenarioError(path.string() + ": " + e.what());
  }
}

double require_number(const json& j, const std::string& field) {
  if (!j.contains(field) || !j[field].is_number())
    throw InvalidScenarioError("field '" + field + "' must be a number");
  return j[field].get<double>();
}

Vec3 parse_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number())
    throw InvalidScenarioError("field '" + field + "' must be a [x, y, z] triple");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

SymMat3 parse_prior_info(const json& prior) {
  if (prior.is_number()) {
    const double v = prior.get<double>();
    if (!(v > 0)) throw InvalidScenarioError("field 'prior' must be a positive variance");
    return SymMat3::identity(1.0 / v);
  }
  if (prior.is_array() && prior.size() == 3) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
      if (!prior[r].is_array() || prior[r].size() != 3)
        throw InvalidScenarioError("field 'prior' matrix must be 3x3");
      for (int c = 0; c < 3; ++c) m(r, c) = prior[r][c].get<double>();
    }
    const SymMat3 cov = SymMat3::from_dense(m);
    if (!cov.is_positive_definite())
      throw InvalidScenarioError("field 'prior' matrix must be positive definite");
    return cov.inverse();
  }
  throw InvalidScenarioError("field 'prior' must be a variance or a 3x3 covariance matrix");
}

}  // namespace

ScenarioFile load_scenario(const std::filesystem::path& path) {
  const json j = parse_file(path);
  ScenarioFile sf;
  Scenario& sc = sf.scenario;

  if (!j.contains("setpoints") || !j["setpoints"].is_array() || j["setpoints"].empty())
    throw InvalidScenarioError("field 'setpoints' must be a non-empty array of [x,y,z]");
  for (const auto& p : j["setpoints"]) sc.setpoints.push_back(parse_vec3(p, "setpoints"));

  const double m = require_number(j, "num_landmarks");
  if (m < 0 || m != std::floor(m))
    throw InvalidScenarioError("field 'num_landmarks' must be a nonnegative integer");
  sc.budget = static_cast<int>(m);
  sc.r_min = require_number(j, "r_min");
  sc.r_max = require_number(j, "r_max");
  if (!(sc.r_min > 0) || !(sc.r_min < sc.r_max))
    throw InvalidScenarioError("fields 'r_min'/'r_max' must satisfy 0 < r_min < r_max");
  sc.model.sigma_m = require_number(j, "sigma_m");
  if (!j.contains("prior")) throw InvalidScenarioError("field 'prior' is required");
  sc.model.prior_info = parse_prior_info(j["prior"]);

  if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("eta")) sf.eta = require_number(j, "eta");
  if (j.contains("r_tol")) sf.r_tol = require_number(j, "r_tol");
  if (!(sf.eta > 0)) throw InvalidScenarioError("field 'eta' must be positive");

  if (j.contains("fov") && !j["fov"].is_null()) {
    const json& f = j["fov"];
    FovSpec fov;
    fov.alpha = require_number(f, "alpha_deg") * M_PI / 180.0;
    fov.landmark_height = f.contains("landmark_height") ? f["landmark_height"].get<double>() : 0.0;
    fov.planar = true;
    sc.fov = fov;
  }

  if (!j.contains("delta") || (j["delta"].is_string() && j["delta"] == "auto")) {
    sf.delta_auto = true;
    sf.resolved = TheoryParams::select_zeta(sf.resolved_r_tol(), sc.r_min, std::max(sc.budget, 1),
                                            sc.model.sigma_m, sf.eta);
    sc.model.delta = sf.resolved->suggested_delta();
  } else if (j["delta"].is_number()) {
    sc.model.delta = j["delta"].get<double>();
    if (!(sc.model.delta >= 0)) throw InvalidScenarioError("field 'delta' must be >= 0");
  } else {
    throw InvalidScenarioError("field 'delta' must be a number or \"auto\"");
  }

  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidScenarioError(path.string() + ": " + e.what());
  }
  return sf;
}

MissionFile load_mission(const std::filesystem::path& path) {
  const json j = parse_file(path);
  MissionFile mf;
  if (!j.contains("waypoints") || !j["waypoints"].is_array() || j["waypoints"].size() < 2)
    throw InvalidScenarioError("field 'waypoints' must list at least two [x,y,z] points");
  for (const auto& p : j["waypoints"]) mf.mission.waypoints.push_back(parse_vec3(p, "waypoints"));
  mf.mission.speed = require_number(j, "speed");
  mf.mission.odom_noise = require_number(j, "odom_noise");
  mf.mission.bearing_fix_interval = static_cast<int>(require_number(j, "bearing_fix_interval"));
  if (j.contains("seed")) mf.mission.rng_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("runs")) mf.runs = static_cast<int>(require_number(j, "runs"));
  if (j.contains("setpoint_spacing")) mf.setpoint_spacing = require_number(j, "setpoint_spacing");
  if (mf.runs < 1) throw InvalidScenarioError("field 'runs' must be at least 1");
  try {
    mf.mission.validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidScenarioError(path.string() + ": " + e.what());
  }
  return mf;
}

BenchSpec load_bench_spec(const std::filesystem::path& path) {
  const json j = parse_file(path);
  BenchSpec b;
  const auto load_ints = [&](const char* field, std::vector<int>* out) {
    if (!j.contains(field)) return;
    out->clear();
    for (const auto& v : j[field]) out->push_back(v.get<int>());
    if (out->empty()) throw InvalidScenarioError(std::string("field '") + field + "' is empty");
  };
  load_ints("n_list", &b.n_list);
  load_ints("m_list", &b.m_list);
  if (j.contains("instances")) b.instances = j["instances"].get<int>();
  if (j.contains("runs")) b.runs = j["runs"].get<int>();
  if (j.contains("sphere_radius_m")) b.sphere_radius = j["sphere_radius_m"].get<double>();
  if (j.contains("noise_sigma_list")) {
    b.noise_sigma_list.clear();
    for (const auto& v : j["noise_sigma_list"]) b.noise_sigma_list.push_back(v.get<double>());
  }
  if (j.contains("noise_n")) b.noise_n = j["noise_n"].get<int>();
  if (j.contains("noise_m")) b.noise_m = j["noise_m"].get<int>();
  if (j.contains("r_min")) b.r_min = j["r_min"].get<double>();
  if (j.contains("r_max")) b.r_max = j["r_max"].get<double>();
  if (j.contains("sigma_m")) b.sigma_m = j["sigma_m"].get<double>();
  if (j.contains("prior")) b.prior_variance = j["prior"].get<double>();
  if (j.contains("seed")) b.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("tables")) {
    b.table_size = b.table_noise = b.table_time = false;
    for (const auto& t : j["tables"]) {
      const std::string name = t.get<std::string>();
      if (name == "size")
        b.table_size = true;
      else if (name == "noise")
        b.table_noise = true;
      else if (name == "time")
        b.table_time = true;
      else
        throw InvalidScenarioError("unknown table '" + name + "'");
    }
  }
  if (b.instances < 1 || b.runs < 1 || !(b.sphere_radius > 0) || !(b.sigma_m > 0) ||
      !(b.prior_variance > 0) || !(b.r_min > 0) || !(b.r_min < b.r_max))
    throw InvalidScenarioError("bench spec: all sizes and scales must be positive");
  return b;
}

nlohmann::json scenario_to_json(const ScenarioFile& sf) {
  json j;
  j["version"] = 1;
  json sp = json::array();
  for (const Vec3& x : sf.scenario.setpoints) sp.push_back({x.x(), x.y(), x.z()});
  j["setpoints"] = sp;
  j["num_landmarks"] = sf.scenario.budget;
  j["r_min"] = sf.scenario.r_min;
  j["r_max"] = sf.scenario.r_max;
  j["sigma_m"] = sf.scenario.model.sigma_m;
  const SymMat3 cov = sf.scenario.model.prior_info.inverse();
  if (std::abs(cov.xy) + std::abs(cov.xz) + std::abs(cov.yz) < 1e-15 &&
      std::abs(cov.xx - cov.yy) + std::abs(cov.yy - cov.zz) < 1e-12) {
    j["prior"] = cov.xx;
  } else {
    const Eigen::Matrix3d d = cov.dense();
    j["prior"] = {{d(0, 0), d(0, 1), d(0, 2)}, {d(1, 0), d(1, 1), d(1, 2)}, {d(2, 0), d(2, 1), d(2, 2)}};
  }
  if (sf.delta_auto)
    j["delta"] = "auto";
  else
    j["delta"] = sf.scenario.model.delta;
  j["eta"] = sf.eta;
  if (sf.r_tol > 0) j["r_tol"] = sf.r_tol;
  if (sf.scenario.fov) {
    j["fov"] = {{"alpha_deg", sf.scenario.fov->alpha * 180.0 / M_PI},
                {"landmark_height", sf.scenario.fov->landmark_height}};
  }
  j["seed"] = sf.scenario.seed;
  return j;
}

void write_placement_json(const std::filesystem::path& path, const ScenarioFile& sf,
                          const Placement& placement, const std::string& algorithm,
                          double kkt_residual, int starts_converged,
                          const std::vector<LocalMinimum>& minima, double wall_time_s) {
  json j;
  j["version"] = 1;
  j["algorithm"] = algorithm;
  j["delta_used"] = sf.scenario.model.delta;
  if (sf.resolved) {
    j["theory"] = {{"eta", sf.resolved->eta},
                   {"zeta", sf.resolved->zeta},
                   {"r_tol", sf.resolved->r_tol},
                   {"s0", sf.resolved->s0},
                   {"delta_max", sf.resolved->delta_max}};
  }
  json lm = json::array();
  for (const Vec3& z : placement.landmarks) lm.push_back({z.x(), z.y(), z.z()});
  j["landmarks"] = lm;
  if (!placement.headings.empty()) {
    json hd = json::array();
    for (const Vec2& n : placement.headings) hd.push_back({n.x(), n.y()});
    j["headings"] = hd;
  }
  j["per_setpoint_cost"] = placement.per_setpoint_cost;
  j["max_cost"] = placement.max_cost;
  j["feasible"] = placement.feasible;
  if (kkt_residual >= 0) j["kkt_residual"] = kkt_residual;
  if (starts_converged >= 0) j["starts_converged"] = starts_converged;
  if (!minima.empty()) {
    json ml = json::array();
    for (const LocalMinimum& lmin : minima) {
      json e;
      e["objective"] = lmin.objective;
      json zl = json::array();
      for (const Vec3& z : lmin.placement.landmarks) zl.push_back({z.x(), z.y(), z.z()});
      e["landmarks"] = zl;
      ml.push_back(e);
    }
    j["distinct_local_minima"] = ml;
  }
  j["seed"] = sf.scenario.seed;
  j["wall_time_s"] = wall_time_s;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_placement_csv(const std::filesystem::path& path, const Placement& placement,
                         double kkt_residual) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char line[256];
  out << "kind,index,x,y,z,value\n";
  for (std::size_t i = 0; i < placement.landmarks.size(); ++i) {
    const Vec3& z = placement.landmarks[i];
    std::snprintf(line, sizeof line, "landmark,%zu,%.12g,%.12g,%.12g,\n", i, z.x(), z.y(), z.z());
    out << line;
  }
  for (std::size_t i = 0; i < placement.headings.size(); ++i) {
    const Vec2& n = placement.headings[i];
    std::snprintf(line, sizeof line, "heading,%zu,%.12g,%.12g,,\n", i, n.x(), n.y());
    out << line;
  }
  for (std::size_t i = 0; i < placement.per_setpoint_cost.size(); ++i) {
    std::snprintf(line, sizeof line, "setpoint_cost,%zu,,,,%.12g\n", i,
                  placement.per_setpoint_cost[i]);
    out << line;
  }
  std::snprintf(line, sizeof line, "max_cost,,,,,%.12g\n", placement.max_cost);
  out << line;
  if (kkt_residual >= 0) {
    std::snprintf(line, sizeof line, "kkt_residual,,,,,%.12g\n", kkt_residual);
    out << line;
  }
}

std::vector<Vec3> read_placement_landmarks(const std::filesystem::path& path) {
  const json j = parse_file(path);
  if (!j.contains("landmarks")) throw InvalidScenarioError("placement document lacks 'landmarks'");
  std::vector<Vec3> z;
  for (const auto& p : j["landmarks"]) z.push_back(parse_vec3(p, "landmarks"));
  return z;
}

}  // namespace lmopt::tool
