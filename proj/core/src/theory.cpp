#include "lmopt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmopt/nlp.hpp"
#include "lmopt/parallel.hpp"

namespace lmopt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void fill_derived(TheoryParams& p) {
  p.s0 = p.eta / (p.eta + 1.0) * p.r_min * p.r_min / p.budget * p.sigma_m * p.sigma_m *
         (1.0 + p.zeta * p.zeta);
  p.delta_max = p.r_min / p.zeta;
}
}  // namespace

double TheoryParams::zeta_formula_squared(double r_tol, double r_min, int budget, double sigma_m,
                                          double eta) {
  const double ratio = r_tol / r_min;
  return ratio * ratio * budget / (sigma_m * sigma_m) * 2.0 / eta;
}

TheoryParams TheoryParams::select_zeta(double r_tol, double r_min, int budget, double sigma_m,
                                       double eta) {
  if (!(r_tol > 0) || !(r_min > 0) || budget < 1 || !(sigma_m > 0) || !(eta > 0))
    throw std::invalid_argument("select_zeta: all inputs must be positive");
  if (r_tol < r_min) throw std::invalid_argument("select_zeta: requires r_tol >= r_min");
  TheoryParams p;
  p.eta = eta;
  p.r_tol = r_tol;
  p.r_min = r_min;
  p.budget = budget;
  p.sigma_m = sigma_m;
  p.zeta = std::min(std::sqrt(zeta_formula_squared(r_tol, r_min, budget, sigma_m, eta)), kZetaCap);
  if (!(p.zeta > 1.0)) throw std::invalid_argument("select_zeta: inputs give zeta <= 1");
  fill_derived(p);
  return p;
}

TheoryParams TheoryParams::from_eta_zeta(double eta, double zeta, double r_min, int budget,
                                         double sigma_m) {
  if (!(eta > 0) || !(zeta > 1) || !(r_min > 0) || budget < 1 || !(sigma_m > 0))
    throw std::invalid_argument("theory params: invalid inputs");
  TheoryParams p;
  p.eta = eta;
  p.zeta = std::min(zeta, kZetaCap);
  p.r_min = r_min;
  p.budget = budget;
  p.sigma_m = sigma_m;
  p.r_tol = 0.0;
  fill_derived(p);
  return p;
}

SandwichCheck check_sandwich(const Vec3& x, std::span<const Vec3> landmarks,
                             const MeasurementModel& model_zero,
                             const MeasurementModel& model_delta, const TheoryParams& params) {
  SandwichCheck r;
  const double delta = model_delta.delta;
  r.precondition_ok = delta > 0.0 && delta < params.delta_max;
  double min_range2 = kInf;
  for (const Vec3& z : landmarks) {
    const double d = (z - x).norm();
    min_range2 = std::min(min_range2, d * d);
    if (d < params.r_min * (1.0 - 1e-12)) r.precondition_ok = false;
  }
  if (!r.precondition_ok) return r;

  const SymMat3 j_delta = total_info(x, landmarks, model_delta).j;
  const SymMat3 j_zero = total_info(x, landmarks, model_zero).j;
  r.s_delta = j_delta.inverse().trace();
  r.s_zero = j_zero.inverse().trace();

  const double f = 1.0 + params.eta;
  r.slack = kInf;
  r.ok = true;
  bool any = false;
  if (r.s_delta <= params.s0) {
    any = true;
    r.ok = r.ok && r.s_zero <= r.s_delta * f && r.s_zero >= r.s_delta / f;
    r.slack = std::min({r.slack, r.s_delta * f - r.s_zero, r.s_zero - r.s_delta / f});
  }
  if (r.s_zero <= params.s0) {  // role-reversed direction
    any = true;
    r.ok = r.ok && r.s_delta <= r.s_zero * f && r.s_delta >= r.s_zero / f;
    r.slack = std::min({r.slack, r.s_zero * f - r.s_delta, r.s_delta - r.s_zero / f});
  }
  r.applicable = any;
  if (!any) {
    r.ok = false;
    r.slack = 0.0;
    return r;
  }

  // Composition route: exact spectral gap, its closed-form bound, and the
  // sum-of-inverses bounds they imply. The claimed-gap bound must never be
  // tighter than the exact-gap bound, which must contain the achieved value.
  r.perturbation_exact = (j_delta - j_zero).spectral_norm();
  const double sig2 = params.sigma_m * params.sigma_m;
  r.perturbation_bound =
      landmarks.size() / (sig2 * min_range2) / (1.0 + params.zeta * params.zeta);
  r.composition_ok = r.perturbation_exact <= r.perturbation_bound * (1.0 + 1e-12);
  if (r.s_delta <= params.s0) {
    const double upper_exact = r.s_delta / (1.0 - r.s_delta * r.perturbation_exact);
    const double upper_claim = r.s_delta / (1.0 - r.s_delta * r.perturbation_bound);
    r.composition_ok = r.composition_ok && r.s_zero <= upper_exact * (1.0 + 1e-12) &&
                       upper_exact <= upper_claim * (1.0 + 1e-12) &&
                       upper_claim <= r.s_delta * f * (1.0 + 1e-12);
  }
  return r;
}

Claim1Check check_claim1(std::span<const double> lambdas, double delta_p, double eta, RNG& rng,
                         int random_perturbations) {
  for (double l : lambdas)
    if (!(l > 0)) throw std::invalid_argument("check_claim1: lambdas must be positive");
  if (!(delta_p > 0) || !(eta > 0))
    throw std::invalid_argument("check_claim1: delta and eta must be positive");

  Claim1Check r;
  r.s0 = eta / (eta + 1.0) / delta_p;
  double s = 0.0;
  for (double l : lambdas) s += 1.0 / l;
  r.s = s;
  r.applicable = s <= r.s0;
  if (!r.applicable) return r;

  const int d = static_cast<int>(lambdas.size());
  const double lo = s / (1.0 + eta), hi = s * (1.0 + eta);
  r.slack = kInf;
  r.ok = true;

  const auto check_perturbed = [&](std::span<const double> tilde) {
    double sum = 0.0;
    for (double l : tilde) sum += 1.0 / l;
    r.ok = r.ok && sum >= lo && sum <= hi;
    r.slack = std::min({r.slack, hi - sum, sum - lo});
    ++r.perturbations_checked;
  };

  std::vector<double> tilde(d);
  // adversarial: all down, all up, and mass on the dominant 1/lambda term
  for (int k = 0; k < d; ++k) tilde[k] = lambdas[k] - delta_p;
  check_perturbed(tilde);
  for (int k = 0; k < d; ++k) tilde[k] = lambdas[k] + delta_p;
  check_perturbed(tilde);
  const int dominant =
      static_cast<int>(std::min_element(lambdas.begin(), lambdas.end()) - lambdas.begin());
  for (int sign : {-1, +1}) {
    for (int k = 0; k < d; ++k) tilde[k] = lambdas[k];
    tilde[dominant] = lambdas[dominant] + sign * delta_p;
    check_perturbed(tilde);
  }
  for (int draw = 0; draw < random_perturbations; ++draw) {
    for (int k = 0; k < d; ++k) tilde[k] = lambdas[k] + delta_p * rng.uniform(-1.0, 1.0);
    check_perturbed(tilde);
  }
  return r;
}

SimplexAudit claim1_simplex_audit(int d, double s, double delta_p, long samples, RNG& rng) {
  if (!(s * delta_p < 1.0))
    throw std::invalid_argument("claim1_simplex_audit: requires s * delta < 1");
  SimplexAudit a;
  a.one_hot_upper = s / (1.0 - s * delta_p);
  a.one_hot_lower = s / (1.0 + s * delta_p);
  a.max_sampled_upper = -kInf;
  a.min_sampled_lower = kInf;

  std::vector<double> w(d);
  for (long it = 0; it < samples; ++it) {
    double total = 0.0;
    for (int k = 0; k < d; ++k) {
      w[k] = -std::log(std::max(rng.uniform01(), 1e-300));
      total += w[k];
    }
    double up = 0.0, down = 0.0;
    for (int k = 0; k < d; ++k) {
      const double ak = s * w[k] / total;
      up += ak / (1.0 - ak * delta_p);
      down += ak / (1.0 + ak * delta_p);
    }
    a.max_sampled_upper = std::max(a.max_sampled_upper, up);
    a.min_sampled_lower = std::min(a.min_sampled_lower, down);
  }
  a.ok = a.max_sampled_upper <= a.one_hot_upper * (1.0 + 1e-12) &&
         a.min_sampled_lower >= a.one_hot_lower * (1.0 - 1e-12);
  return a;
}

Claim2Check check_claim2(const Vec3& x, std::span<const Vec3> landmarks,
                         const MeasurementModel& model, double zeta) {
  Claim2Check r;
  const double delta = model.delta;
  r.precondition_ok = delta >= 0.0 && zeta > 0.0;
  double min_range2 = kInf;
  for (const Vec3& z : landmarks) {
    const double range = (z - x).norm();
    min_range2 = std::min(min_range2, range * range);
    if (delta / range > 1.0 / zeta * (1.0 + 1e-12)) r.precondition_ok = false;
  }
  if (!r.precondition_ok || landmarks.empty()) return r;

  MeasurementModel model_zero = model;
  model_zero.delta = 0.0;
  const SymMat3 j_delta = total_info(x, landmarks, model).j;
  const SymMat3 j_zero = total_info(x, landmarks, model_zero).j;
  const double sig2 = model.sigma_m * model.sigma_m;

  r.gap = (j_delta - j_zero).spectral_norm();
  r.bound = landmarks.size() / (sig2 * min_range2 * (1.0 + zeta * zeta));
  r.slack = r.bound - r.gap;
  r.ok = r.gap <= r.bound * (1.0 + 1e-12);

  // per-pair bound
  for (const Vec3& z : landmarks) {
    const double range2 = (z - x).squaredNorm();
    const double pair_gap = (pair_info(x, z, delta) - pair_info(x, z, 0.0)).spectral_norm();
    const double pair_bound = 1.0 / (range2 * (1.0 + zeta * zeta));
    r.ok = r.ok && pair_gap <= pair_bound * (1.0 + 1e-12);
    r.slack = std::min(r.slack, pair_bound - pair_gap);
  }

  // Weyl step on sorted eigenvalues
  const auto ev_delta = j_delta.eigenvalues_ascending();
  const auto ev_zero = j_zero.eigenvalues_ascending();
  for (int k = 0; k < 3; ++k) {
    const double move = std::abs(ev_delta[k] - ev_zero[k]);
    r.ok = r.ok && move <= r.gap * (1.0 + 1e-9) + 1e-15;
    r.slack = std::min(r.slack, r.gap - move);
  }
  return r;
}

CorollaryCheck check_corollary(const Scenario& scenario, const TheoryParams& params,
                               const SolverConfig& solver_cfg, const EvoConfig& evo_cfg) {
  CorollaryCheck r;
  r.bound = (1.0 + params.eta) * (1.0 + params.eta);

  Scenario smoothed = scenario;
  smoothed.model.delta = params.suggested_delta();
  if (!(smoothed.model.delta > 0.0) || smoothed.model.delta >= params.delta_max) {
    r.skipped_reason = "suggested delta outside (0, delta_max)";
    return r;
  }

  const SolveReport smoothed_report = solve(build_nlp(smoothed), solver_cfg);
  r.v_delta = smoothed_report.objective;
  if (r.v_delta > params.s0) {
    r.skipped_reason = "no placement found inside the s0 sublevel set";
    return r;
  }

  Scenario exact = scenario;
  exact.model.delta = 0.0;
  Placement exact_eval = evaluate_placement(exact, smoothed_report.best.landmarks);
  r.v_zero_at_opt = exact_eval.max_cost;

  // Reference exact optimum: best of the evolutionary search on the
  // unsmoothed objective, a solver run at a tiny smoothing level, and the
  // smoothed solution itself.
  r.v_zero_best = r.v_zero_at_opt;
  try {
    const Placement evo = evolve_place(exact, evo_cfg);
    r.v_zero_best = std::min(r.v_zero_best, evo.max_cost);
  } catch (const std::exception&) {
  }
  try {
    Scenario tiny = scenario;
    tiny.model.delta = 1e-6 * scenario.r_min;
    const SolveReport tiny_report = solve(build_nlp(tiny), solver_cfg);
    const Placement tiny_exact = evaluate_placement(exact, tiny_report.best.landmarks);
    r.v_zero_best = std::min(r.v_zero_best, tiny_exact.max_cost);
  } catch (const std::exception&) {
  }

  r.certified = true;
  r.ratio = r.v_zero_at_opt / r.v_zero_best;
  r.ok = r.ratio <= r.bound * (1.0 + 1e-9);
  return r;
}

namespace {

/// Landmark directions spread over the sphere (or circle), randomly rotated;
/// ranges barely above r_min. These concentrate information so the smoothed
/// cost lands under s0 for tight (eta, zeta) pairs.
std::vector<Vec3> informative_config(const TheoryParams& params, const Vec3& x, RNG& rng) {
  const int m = params.budget;
  std::vector<Vec3> dirs;
  dirs.reserve(m);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < m; ++k) {
    const double y = 1.0 - 2.0 * (k + 0.5) / m;
    const double rho = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double a = golden * k;
    dirs.emplace_back(rho * std::cos(a), y, rho * std::sin(a));
  }
  const Eigen::Matrix3d rot = rng.rotation();
  std::vector<Vec3> z(m);
  for (int k = 0; k < m; ++k) {
    Vec3 dir = rot * dirs[k] + 0.15 * rng.normal_vec3();
    dir.normalize();
    z[k] = x + rng.uniform(params.r_min, 1.2 * params.r_min) * dir;
  }
  return z;
}

}  // namespace

CertificationSummary certify_sandwich_random(const TheoryParams& params, double prior_variance,
                                             int draws, std::uint64_t seed, int workers) {
  struct Slot {
    int checked = 0, violations = 0, skipped = 0;
    double worst_slack = kInf;
  };
  std::vector<Slot> slots(draws);
  MeasurementModel model_zero = MeasurementModel::isotropic(prior_variance, params.sigma_m, 0.0);
  MeasurementModel model_delta =
      MeasurementModel::isotropic(prior_variance, params.sigma_m, params.suggested_delta());

  parallel_for(draws, workers, [&](std::size_t i) {
    RNG rng(RNG::derive_seed(seed, i));
    Slot& s = slots[i];
    for (int attempt = 0; attempt < 64; ++attempt) {
      const Vec3 x = rng.normal_vec3(5.0);
      const auto z = informative_config(params, x, rng);
      const SandwichCheck c = check_sandwich(x, z, model_zero, model_delta, params);
      if (!c.precondition_ok || !c.applicable) {
        ++s.skipped;
        continue;
      }
      ++s.checked;
      if (!c.ok || !c.composition_ok) ++s.violations;
      s.worst_slack = std::min(s.worst_slack, c.slack);
      return;
    }
  });

  CertificationSummary sum;
  sum.worst_slack = kInf;
  for (const Slot& s : slots) {
    sum.checked += s.checked;
    sum.violations += s.violations;
    sum.skipped += s.skipped;
    sum.worst_slack = std::min(sum.worst_slack, s.worst_slack);
  }
  return sum;
}

CertificationSummary certify_claim1_random(double eta, int draws, std::uint64_t seed,
                                           int workers) {
  struct Slot {
    int checked = 0, violations = 0;
    double worst_slack = kInf;
  };
  std::vector<Slot> slots(draws);
  parallel_for(draws, workers, [&](std::size_t i) {
    RNG rng(RNG::derive_seed(seed, i));
    Slot& s = slots[i];
    const double delta_p = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    const double s0 = eta / (eta + 1.0) / delta_p;
    const double target = rng.uniform(0.5, 0.99) * s0;
    const int d = 3;
    // inverse eigenvalues on the scaled simplex
    double w[3], total = 0.0;
    for (int k = 0; k < d; ++k) {
      w[k] = -std::log(std::max(rng.uniform01(), 1e-300));
      total += w[k];
    }
    std::vector<double> lambdas(d);
    for (int k = 0; k < d; ++k) lambdas[k] = total / (target * w[k]);
    const Claim1Check c = check_claim1(lambdas, delta_p, eta, rng);
    if (!c.applicable) return;
    ++s.checked;
    if (!c.ok) ++s.violations;
    s.worst_slack = std::min(s.worst_slack, c.slack);
  });

  CertificationSummary sum;
  sum.worst_slack = kInf;
  for (const Slot& s : slots) {
    sum.checked += s.checked;
    sum.violations += s.violations;
    sum.worst_slack = std::min(sum.worst_slack, s.worst_slack);
  }
  return sum;
}

CertificationSummary certify_claim2_random(const TheoryParams& params, double prior_variance,
                                           int draws, std::uint64_t seed, int workers) {
  struct Slot {
    int checked = 0, violations = 0, skipped = 0;
    double worst_slack = kInf;
  };
  std::vector<Slot> slots(draws);
  parallel_for(draws, workers, [&](std::size_t i) {
    RNG rng(RNG::derive_seed(seed, i));
    Slot& s = slots[i];
    const Vec3 x = rng.normal_vec3(5.0);
    std::vector<Vec3> z(params.budget);
    for (Vec3& zj : z)
      zj = x + rng.uniform(params.r_min, 3.0 * params.r_min) * rng.unit_vec3();
    MeasurementModel model = MeasurementModel::isotropic(prior_variance, params.sigma_m,
                                                         rng.uniform(0.1, 0.999) * params.r_min /
                                                             params.zeta);
    const Claim2Check c = check_claim2(x, z, model, params.zeta);
    if (!c.precondition_ok) {
      ++s.skipped;
      return;
    }
    ++s.checked;
    if (!c.ok) ++s.violations;
    s.worst_slack = std::min(s.worst_slack, c.slack);
  });

  CertificationSummary sum;
  sum.worst_slack = kInf;
  for (const Slot& s : slots) {
    sum.checked += s.checked;
    sum.violations += s.violations;
    sum.skipped += s.skipped;
    sum.worst_slack = std::min(sum.worst_slack, s.worst_slack);
  }
  return sum;
}

}  // namespace lmopt
