#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lmopt/baselines.hpp"
#include "lmopt/scenario.hpp"
#include "lmopt/solver.hpp"

namespace lmopt {

/// Couples the smoothing level to a certified multiplicative error on the
/// trace-of-covariance cost: for delta below delta_max, any placement whose
/// smoothed cost stays under s0 has its exact cost within a (1+eta) factor.
struct TheoryParams {
  double eta = 0.1;
  double zeta = 10.0;
  double r_tol = 0.0;
  double s0 = 0.0;
  double delta_max = 0.0;

  // problem context the bounds are relative to
  double r_min = 1.0;
  int budget = 1;
  double sigma_m = 0.1;

  static constexpr double kZetaCap = 1e5;

  /// zeta from a tolerated uncertainty radius: zeta^2 = (r_tol/r_min)^2 * M /
  /// (sigma_m^2) * 2/eta, capped at kZetaCap.
  static TheoryParams select_zeta(double r_tol, double r_min, int budget, double sigma_m,
                                  double eta);

  /// Direct construction from a chosen (eta, zeta) pair.
  static TheoryParams from_eta_zeta(double eta, double zeta, double r_min, int budget,
                                    double sigma_m);

  /// The uncapped value of zeta^2 the selection formula produces.
  static double zeta_formula_squared(double r_tol, double r_min, int budget, double sigma_m,
                                     double eta);

  /// Smoothing level used when a scenario asks for it automatically.
  double suggested_delta() const { return 0.5 * delta_max; }
};

/// Two-sided multiplicative bound between the smoothed and exact costs of one
/// configuration, checked in both directions plus the composed
/// eigenvalue-perturbation route.
struct SandwichCheck {
  bool precondition_ok = false;  // delta in (0, delta_max) and ranges >= r_min
  bool applicable = false;       // at least one side under s0
  bool ok = false;
  double s_delta = 0.0;
  double s_zero = 0.0;
  double slack = 0.0;  // smallest margin to a bound among the applied checks
  double perturbation_exact = 0.0;
  double perturbation_bound = 0.0;
  bool composition_ok = false;  // achieved <= bound(exact gap) <= bound(claimed gap)
};

SandwichCheck check_sandwich(const Vec3& x, std::span<const Vec3> landmarks,
                             const MeasurementModel& model_zero,
                             const MeasurementModel& model_delta, const TheoryParams& params);

/// Sum-of-inverses stability under bounded perturbation of a positive
/// sequence, including adversarial mass-on-one-term perturbations.
struct Claim1Check {
  bool applicable = false;  // s <= s0
  bool ok = false;
  double s = 0.0;
  double s0 = 0.0;
  double slack = 0.0;
  long perturbations_checked = 0;
};

Claim1Check check_claim1(std::span<const double> lambdas, double delta_p, double eta, RNG& rng,
                         int random_perturbations = 8);

/// Brute-force audit of the extreme-point argument: over the simplex
/// {a >= 0, sum a = s}, the one-hot allocation attains the extreme values of
/// sum 1/(1/a_k -+ delta_p).
struct SimplexAudit {
  bool ok = false;
  double one_hot_upper = 0.0;  // value of sum 1/(1/a - delta) at (s,0,..)
  double max_sampled_upper = 0.0;
  double one_hot_lower = 0.0;  // value of sum 1/(1/a + delta) at (s,0,..)
  double min_sampled_lower = 0.0;
};

SimplexAudit claim1_simplex_audit(int d, double s, double delta_p, long samples, RNG& rng);

/// Spectral-norm gap between smoothed and exact information matrices against
/// its closed-form bound, the per-pair version, and the eigenvalue
/// (Weyl-step) consequence.
struct Claim2Check {
  bool precondition_ok = false;  // delta / range <= 1/zeta for every landmark
  bool ok = false;
  double gap = 0.0;    // |J_delta - J_0|_2
  double bound = 0.0;  // M sigma^-2 / min range^2 / (1+zeta^2)
  double slack = 0.0;  // min slack over total, per-pair and Weyl inequalities
};

Claim2Check check_claim2(const Vec3& x, std::span<const Vec3> landmarks,
                         const MeasurementModel& model, double zeta);

/// End-to-end suboptimality certificate: solves the smoothed problem, then
/// compares the exact cost of that solution to the best exact optimum found
/// by independent search.
struct CorollaryCheck {
  bool certified = false;  // sublevel condition held, bound checked
  std::string skipped_reason;
  double v_delta = 0.0;        // smoothed optimum found
  double v_zero_at_opt = 0.0;  // exact cost of the smoothed solution
  double v_zero_best = 0.0;    // best exact value found by reference searches
  double ratio = 0.0;
  double bound = 0.0;  // (1+eta)^2
  bool ok = false;
};

CorollaryCheck check_corollary(const Scenario& scenario, const TheoryParams& params,
                               const SolverConfig& solver_cfg = {}, const EvoConfig& evo_cfg = {});

/// Aggregate of a randomized certification run.
struct CertificationSummary {
  long checked = 0;
  long violations = 0;
  long skipped = 0;
  double worst_slack = 0.0;
};

/// Random informative configurations with smoothed cost under s0; counts
/// sandwich violations. Configurations failing the sublevel condition are
/// skipped (and resampled up to a cap).
CertificationSummary certify_sandwich_random(const TheoryParams& params, double prior_variance,
                                             int draws, std::uint64_t seed, int workers = 1);

CertificationSummary certify_claim1_random(double eta, int draws, std::uint64_t seed,
                                           int workers = 1);

CertificationSummary certify_claim2_random(const TheoryParams& params, double prior_variance,
                                           int draws, std::uint64_t seed, int workers = 1);

}  // namespace lmopt
