#include "crossdiff/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "crossdiff/diagnostics.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/scheme.hpp"
#include "crossdiff/sparse.hpp"

namespace crossdiff {

void SolverConfig::validate() const {
  if (!(newton_tol > 0.0)) throw ConfigError("solver.newton_tol must be positive");
  if (max_newton_iters < 1) throw ConfigError("solver.max_newton_iters must be at least 1");
  if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0))
    throw ConfigError("solver.line_search_shrink must lie in (0, 1)");
  if (max_line_search < 0) throw ConfigError("solver.max_line_search must be nonnegative");
  if (eps_ladder.empty() || eps_ladder.back() != 0.0) throw ConfigError("solver.eps_ladder must end at 0");
  for (std::size_t r = 0; r < eps_ladder.size(); ++r) {
    if (!(eps_ladder[r] >= 0.0)) throw ConfigError("solver.eps_ladder entries must be nonnegative");
    if (r > 0 && !(eps_ladder[r] < eps_ladder[r - 1]))
      throw ConfigError("solver.eps_ladder must be strictly decreasing");
  }
  if (!(fixed_point_damping > 0.0 && fixed_point_damping <= 1.0))
    throw ConfigError("solver.fixed_point_damping must lie in (0, 1]");
  if (max_fp_iters < 1) throw ConfigError("solver.max_fp_iters must be at least 1");
  if (!(tol_neg >= 0.0)) throw ConfigError("solver.tol_neg must be nonnegative");
  if (!(entropy_slack_factor > 0.0)) throw ConfigError("solver.entropy_slack_factor must be positive");
}

namespace {

double min_entry(const State& s) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : s.values()) m = std::min(m, v);
  return m;
}

void check_prev(const ModelData& model, const Mesh& mesh, const State& prev, double dt, double tol_neg) {
  if (prev.species() != model.n() || prev.cells() != mesh.num_cells())
    throw PreconditionError("previous state does not match mesh and model");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  const double m = min_entry(prev);
  if (m < -tol_neg) throw PreconditionError(fmt::format("previous state has a negative entry {:.6g}", m));
}

// The map F_eps with the discrete (-Laplacian + identity) factorized once.
class EpsilonMap {
 public:
  EpsilonMap(const ModelData& model, const Mesh& mesh, const State& prev, double dt, double eps)
      : model_(model), mesh_(mesh), prev_(prev), dt_(dt), eps_(eps) {
    if (!(eps > 0.0)) throw PreconditionError("solve_linear_epsilon: eps must be positive");
    solver_.compute(h1_operator(mesh));
    if (solver_.info() != Eigen::Success) throw Singular("eps-regularized operator could not be factorized");
  }

  State operator()(const State& w_in) const {
    const Residual r = residual(model_, mesh_, prev_, to_primal(model_, w_in), dt_);
    State w_out(model_.n(), mesh_.num_cells());
    for (std::size_t i = 0; i < model_.n(); ++i) {
      const Eigen::VectorXd rhs = -species_field(r.values, i) / eps_;
      const Eigen::VectorXd x = solver_.solve(rhs);
      if (solver_.info() != Eigen::Success || !x.allFinite()) throw Singular("eps-regularized solve failed");
      for (std::size_t k = 0; k < mesh_.num_cells(); ++k) w_out(i, k) = x(static_cast<Eigen::Index>(k));
    }
    return w_out;
  }

 private:
  const ModelData& model_;
  const Mesh& mesh_;
  const State& prev_;
  double dt_;
  double eps_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

State axpby(double a, const State& x, double b, const State& y) {
  State out = x;
  out.flat() = a * x.flat() + b * y.flat();
  return out;
}

// Newton on the regularized residual in entropy variables. Returns the
// number of iterations, or -1 when it fails.
int regularized_newton(const ModelData& model, const Mesh& mesh, const State& prev, double dt, double eps,
                       const SolverConfig& cfg, State& w, Residual& g) {
  const std::size_t n = model.n();
  const std::size_t ncells = mesh.num_cells();

  SparseSystem winv;
  winv.size = n * ncells;
  SparseSystem lap;
  lap.size = n * ncells;
  const Eigen::SparseMatrix<double> h1 = h1_operator(mesh);
  for (std::size_t k = 0; k < ncells; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        winv.add(k * n + i, k * n + j,
                 model.entropy_transform_inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  for (Eigen::Index col = 0; col < h1.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(h1, col); it; ++it)
      for (std::size_t i = 0; i < n; ++i)
        lap.add(static_cast<std::size_t>(it.row()) * n + i, static_cast<std::size_t>(it.col()) * n + i, eps * it.value());
  const Eigen::SparseMatrix<double> winv_m = winv.matrix();
  const Eigen::SparseMatrix<double> lap_m = lap.matrix();

  for (int it = 0; it < cfg.max_newton_iters; ++it) {
    if (g.norm <= cfg.newton_tol) return it;
    const State u = to_primal(model, w);
    const Eigen::SparseMatrix<double> jr = jacobian(model, mesh, prev, u, dt).matrix();
    const Eigen::SparseMatrix<double> jg = Eigen::SparseMatrix<double>(jr * winv_m) + lap_m;
    Eigen::VectorXd step;
    try {
      step = solve_sparse(jg, -g.values.flat());
    } catch (const Singular&) {
      return -1;
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls <= cfg.max_line_search; ++ls) {
      State cand = w;
      cand.flat() += alpha * step;
      Residual gc = residual_regularized(model, mesh, cand, prev, dt, eps);
      if (gc.norm <= (1.0 - 1e-4 * alpha) * g.norm) {
        w = std::move(cand);
        g = std::move(gc);
        accepted = true;
        break;
      }
      alpha *= cfg.line_search_shrink;
    }
    if (!accepted) return -1;
  }
  return g.norm <= cfg.newton_tol ? cfg.max_newton_iters : -1;
}

// Solves the scheme at s dt for s ramping from 0 to 1; the step in s grows
// after each success and shrinks after each failure.
std::pair<State, StepReport> ramp_solve(const ModelData& model, const Mesh& mesh, const State& prev, double dt,
                                        const SolverConfig& cfg) {
  constexpr double kMinStep = 1e-6;
  State u = prev;
  int solves = 0, iters = 0;
  double done = 0.0, ds = 0.25;
  while (done < 1.0) {
    const double s = std::min(1.0, done + ds);
    try {
      auto [next, rep] = newton_step_solve_from(model, mesh, prev, u, s * dt, cfg);
      u = std::move(next);
      iters += rep.newton_iters;
      ++solves;
      done = s;
      ds *= 2.0;
    } catch (const NoConvergence& e) {
      ds *= 0.25;
      if (ds < kMinStep)
        throw NoConvergence(fmt::format("time-step ramp stalled at s = {:.6g}: {}", done, e.what()));
    }
  }
  StepReport report;
  report.newton_iters = iters;
  report.ramp_solves = solves;
  report.residual_norm = residual(model, mesh, prev, u, dt).norm;
  return {std::move(u), std::move(report)};
}

}  // namespace

State solve_linear_epsilon(const ModelData& model, const Mesh& mesh, const State& w_in, const State& prev, double dt,
                           double eps) {
  if (w_in.species() != model.n() || w_in.cells() != mesh.num_cells())
    throw PreconditionError("solve_linear_epsilon: state does not match mesh and model");
  return EpsilonMap(model, mesh, prev, dt, eps)(w_in);
}

std::pair<State, StepReport> newton_step_solve_from(const ModelData& model, const Mesh& mesh, const State& prev,
                                                    const State& guess, double dt, const SolverConfig& cfg) {
  if (guess.species() != model.n() || guess.cells() != mesh.num_cells())
    throw PreconditionError("initial guess does not match mesh and model");
  StepReport report;
  State u = guess;
  u.time_index = prev.time_index + 1;
  Residual r = residual(model, mesh, prev, u, dt);

  for (int it = 0; it < cfg.max_newton_iters && r.norm > cfg.newton_tol; ++it) {
    SparseSystem sys = jacobian(model, mesh, prev, u, dt);
    sys.rhs = -r.values.flat();
    Eigen::VectorXd step;
    try {
      step = solve_sparse(sys);
    } catch (const Singular& e) {
      throw NoConvergence(fmt::format("Newton linear solve failed at iteration {}: {}", it, e.what()));
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls <= cfg.max_line_search; ++ls) {
      State cand = u;
      cand.flat() += alpha * step;
      Residual rc = residual(model, mesh, prev, cand, dt);
      if (rc.norm <= (1.0 - 1e-4 * alpha) * r.norm) {
        u = std::move(cand);
        r = std::move(rc);
        accepted = true;
        break;
      }
      alpha *= cfg.line_search_shrink;
    }
    ++report.newton_iters;
    if (!accepted)
      throw NoConvergence(fmt::format("line search failed at Newton iteration {} (residual {:.3g})", it, r.norm));
  }
  if (!(r.norm <= cfg.newton_tol))
    throw NoConvergence(fmt::format("Newton did not converge in {} iterations (residual {:.3g})",
                                    cfg.max_newton_iters, r.norm));
  report.residual_norm = r.norm;
  return {std::move(u), std::move(report)};
}

std::pair<State, StepReport> newton_step_solve(const ModelData& model, const Mesh& mesh, const State& prev, double dt,
                                               const SolverConfig& cfg) {
  check_prev(model, mesh, prev, dt, cfg.tol_neg);
  return newton_step_solve_from(model, mesh, prev, prev, dt, cfg);
}

std::pair<State, StepReport> epsilon_continuation_solve(const ModelData& model, const Mesh& mesh, const State& prev,
                                                        double dt, const SolverConfig& cfg) {
  check_prev(model, mesh, prev, dt, cfg.tol_neg);
  cfg.validate();

  const double energy_bound = total_entropy(model, mesh, prev);
  std::vector<EpsRung> path;
  State w = to_entropy(model, prev);
  double theta = cfg.fixed_point_damping;
  constexpr double kMinDamping = 1e-300;

  for (double eps : cfg.eps_ladder) {
    if (eps == 0.0) break;
    EpsRung rung;
    rung.eps = eps;
    const EpsilonMap f_eps(model, mesh, prev, dt, eps);
    Residual g = residual_regularized(model, mesh, w, prev, dt, eps);

    while (g.norm > cfg.newton_tol && rung.iterations < cfg.max_fp_iters && theta > kMinDamping) {
      const State fw = f_eps(w);
      bool accepted = false;
      for (int ls = 0; ls <= cfg.max_line_search; ++ls) {
        State cand = axpby(1.0 - theta, w, theta, fw);
        Residual gc = residual_regularized(model, mesh, cand, prev, dt, eps);
        if (gc.norm < g.norm) {
          w = std::move(cand);
          g = std::move(gc);
          accepted = true;
          break;
        }
        theta *= cfg.line_search_shrink;
      }
      ++rung.iterations;
      if (!accepted) break;
    }

    if (g.norm > cfg.newton_tol) {
      State w_try = w;
      Residual g_try = g;
      const int its = regularized_newton(model, mesh, prev, dt, eps, cfg, w_try, g_try);
      if (its >= 0) {
        w = std::move(w_try);
        g = std::move(g_try);
        rung.newton_finish = true;
        rung.iterations += its;
      }
    }

    rung.converged = g.norm <= cfg.newton_tol;
    rung.residual_norm = g.norm;
    double h1 = 0.0;
    for (std::size_t i = 0; i < model.n(); ++i) h1 += discrete_h1_norm_sq(mesh, species_field(w, i));
    rung.energy = eps * dt * h1;
    rung.energy_bound = energy_bound;
    path.push_back(rung);
  }

  State u;
  StepReport report;
  try {
    std::tie(u, report) = newton_step_solve_from(model, mesh, prev, to_primal(model, w), dt, cfg);
  } catch (const NoConvergence&) {
    std::tie(u, report) = ramp_solve(model, mesh, prev, dt, cfg);
  }
  EpsRung last;
  last.converged = true;
  last.iterations = report.newton_iters;
  last.residual_norm = report.residual_norm;
  last.energy_bound = energy_bound;
  path.push_back(last);
  report.eps_path = std::move(path);
  return {std::move(u), std::move(report)};
}

std::pair<State, StepReport> advance(const ModelData& model, const Mesh& mesh, const State& prev, double dt,
                                     const SolverConfig& cfg) {
  cfg.validate();
  check_prev(model, mesh, prev, dt, cfg.tol_neg);

  State next;
  StepReport report;
  try {
    std::tie(next, report) = newton_step_solve(model, mesh, prev, dt, cfg);
  } catch (const NoConvergence& newton_failure) {
    try {
      std::tie(next, report) = epsilon_continuation_solve(model, mesh, prev, dt, cfg);
    } catch (const NoConvergence& fallback_failure) {
      throw NoConvergence(fmt::format("step {} failed: Newton: {}; eps-continuation: {}", prev.time_index + 1,
                                      newton_failure.what(), fallback_failure.what()));
    }
    report.fallback_used = true;
  }

  report.min_value = min_entry(next);
  if (report.min_value < -cfg.tol_neg)
    throw CertificateViolation(fmt::format("step {}: negative density {:.6g} below -tol_neg", prev.time_index + 1,
                                           report.min_value));
  for (double& v : next.values()) {
    if (v < 0.0) {
      report.clamp_magnitude = std::max(report.clamp_magnitude, -v);
      v = 0.0;
    }
  }

  const auto before = mass_per_species(mesh, prev);
  report.masses = mass_per_species(mesh, next);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double change = std::abs(report.masses[i] - before[i]);
    const double denom = std::abs(before[i]);
    const double drift = denom > 0.0 ? change / denom : change;
    report.max_mass_drift = std::max(report.max_mass_drift, drift);
  }
  if (report.max_mass_drift > 1e-10)
    throw CertificateViolation(fmt::format("step {}: relative mass drift {:.3g} exceeds 1e-10", prev.time_index + 1,
                                           report.max_mass_drift));

  const double h_prev = total_entropy(model, mesh, prev);
  const double tol = cfg.entropy_slack_factor * cfg.newton_tol * (1.0 + std::abs(h_prev));
  const EntropyCertificate cert = entropy_certificate(model, mesh, prev, next, dt, tol);
  report.entropy_before = cert.h_prev;
  report.entropy_after = cert.h_next;
  report.dissipation_gradient_term = cert.grad_term;
  report.dissipation_pressure_term = cert.pressure_term;
  report.entropy_slack = cert.slack;
  report.entropy_tolerance = cert.tolerance;
  report.entropy_inequality_satisfied = cert.satisfied;
  return {std::move(next), std::move(report)};
}

}  // namespace crossdiff
