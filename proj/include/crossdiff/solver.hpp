#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "crossdiff/mesh.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/state.hpp"

namespace crossdiff {

struct SolverConfig {
  /// Max-abs scheme residual accepted as converged.
  double newton_tol = 1e-10;
  int max_newton_iters = 50;
  double line_search_shrink = 0.5;
  int max_line_search = 30;
  /// Strictly decreasing, ending at 0.
  std::vector<double> eps_ladder{1e-2, 1e-4, 1e-6, 0.0};
  double fixed_point_damping = 0.5;
  int max_fp_iters = 200;
  double tol_neg = 1e-10;
  double entropy_slack_factor = 10.0;

  /// Throws ConfigError on an invalid combination.
  void validate() const;

  bool operator==(const SolverConfig&) const = default;
};

/// Outcome of one rung of the eps-continuation.
struct EpsRung {
  double eps = 0.0;
  int iterations = 0;
  bool converged = false;
  /// The damped fixed-point iteration stalled and the rung was finished by
  /// Newton on the regularized residual.
  bool newton_finish = false;
  double residual_norm = 0.0;
  /// eps dt sum_i |w_i|^2_{1,2} at the rung's final iterate.
  double energy = 0.0;
  /// sum_K m(K) h(prev_K).
  double energy_bound = 0.0;
};

struct StepReport {
  int newton_iters = 0;
  bool fallback_used = false;
  std::vector<EpsRung> eps_path;
  /// Number of Newton solves along the time-step ramp s dt, s -> 1, used when
  /// Newton at eps = 0 stalls; 0 if the ramp was not needed.
  int ramp_solves = 0;
  double residual_norm = 0.0;
  double entropy_before = 0.0;
  double entropy_after = 0.0;
  double dissipation_gradient_term = 0.0;
  double dissipation_pressure_term = 0.0;
  /// entropy_before - entropy_after - both dissipation terms.
  double entropy_slack = 0.0;
  double entropy_tolerance = 0.0;
  bool entropy_inequality_satisfied = false;
  /// Minimum entry before clamping.
  double min_value = 0.0;
  /// Largest |u| among entries in [-tol_neg, 0) that were set to 0.
  double clamp_magnitude = 0.0;
  std::vector<double> masses;
  double max_mass_drift = 0.0;
};

/// One application of the map F_eps: solves the linear problem
///   eps (sum_sigma tau (w_K - w_L) + m(K) w_K) = -(m(K)/dt (u(w_in) - prev) + sum_sigma F^+(u(w_in)))
/// for every species and returns the solution in entropy variables.
State solve_linear_epsilon(const ModelData& model, const Mesh& mesh, const State& w_in, const State& prev, double dt,
                           double eps);

/// Newton's method with backtracking on the scheme residual, started at prev.
/// Throws NoConvergence. The report carries solver statistics only.
std::pair<State, StepReport> newton_step_solve(const ModelData& model, const Mesh& mesh, const State& prev, double dt,
                                               const SolverConfig& cfg);

/// Same, started at an arbitrary initial guess.
std::pair<State, StepReport> newton_step_solve_from(const ModelData& model, const Mesh& mesh, const State& prev,
                                                    const State& guess, double dt, const SolverConfig& cfg);

/// Damped fixed-point iteration w <- (1 - theta) w + theta F_eps(w) along
/// cfg.eps_ladder, each rung warm-started by the previous one, finished at
/// eps = 0 by Newton on the scheme. If that Newton stalls, the step is reached
/// through Newton solves at s dt for s increasing to 1, each started at the
/// previous solution. Throws NoConvergence.
std::pair<State, StepReport> epsilon_continuation_solve(const ModelData& model, const Mesh& mesh, const State& prev,
                                                        double dt, const SolverConfig& cfg);

/// One implicit Euler step: Newton, then eps-continuation if Newton fails;
/// tiny negatives are clamped and the step is certified. Throws
/// NoConvergence, CertificateViolation or PreconditionError.
std::pair<State, StepReport> advance(const ModelData& model, const Mesh& mesh, const State& prev, double dt,
                                     const SolverConfig& cfg);

}  // namespace crossdiff
