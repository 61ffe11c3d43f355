#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "crossdiff/diagnostics.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/scheme.hpp"
#include "crossdiff/solver.hpp"
#include "support/oracles.hpp"

using namespace crossdiff;

namespace {

struct TwoCellSetup {
  ModelData model;
  Mesh mesh = build_cartesian(2, 1, 1.0, 1.0);
  State prev{2, 2};
  double dt = oracle::TwoCellProblem::dt;

  TwoCellSetup() {
    Eigen::MatrixXd a(2, 2);
    a << 2, 1, 1, 2;
    model = build_model(InteractionMatrix{a, 1.0});
    prev(0, 0) = 1.0;
    prev(1, 1) = 1.0;
  }
};

// Solution of the two-cell step computed by the brute-force oracle in
// support/oracles.hpp and frozen here: cell 0 = (3/4, 1/4), cell 1 = (1/4, 3/4).
constexpr double kTwoCellFrozen[4] = {0.75, 0.25, 0.25, 0.75};

void expect_matches_frozen(const State& s, double tol) {
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(s.values()[c], kTwoCellFrozen[c], tol) << "entry " << c;
}

double max_abs_diff(const State& a, const State& b) { return (a.flat() - b.flat()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(SolverConfig, DefaultsValidate) { EXPECT_NO_THROW(SolverConfig{}.validate()); }

TEST(SolverConfig, RejectsBadLadder) {
  SolverConfig cfg;
  cfg.eps_ladder = {1e-2, 1e-3};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.eps_ladder = {1e-4, 1e-2, 0.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.line_search_shrink = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.fixed_point_damping = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(TwoCellOracle, BruteForceAgreesWithFrozenValues) {
  const auto oracle = oracle::TwoCellProblem::solve();
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(oracle[c], kTwoCellFrozen[c], 1e-10);
}

TEST(LinearEpsilon, ZeroDataGivesZero) {
  const TwoCellSetup s;
  const State zero(2, 2);
  const State out = solve_linear_epsilon(s.model, s.mesh, zero, zero, 0.1, 1e-3);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(LinearEpsilon, SolvesTheRegularizedLinearProblem) {
  std::mt19937_64 rng(59);
  const Mesh mesh = build_cartesian(3, 2, 1.0, 1.0);
  const ModelData m = build_model(InteractionMatrix{oracle::random_db_matrix(rng, 3), 0.4});
  const State prev = oracle::random_state(rng, 3, mesh.num_cells());
  const State w_in = to_entropy(m, oracle::random_state(rng, 3, mesh.num_cells()));
  const double eps = 0.05, dt = 0.02;
  const State w_out = solve_linear_epsilon(m, mesh, w_in, prev, dt, eps);
  // eps (L + I) w_out + (rest of regularized residual at w_in) = 0.
  const Residual at_in = residual_regularized(m, mesh, w_in, prev, dt, 0.0);
  const Eigen::SparseMatrix<double> op = h1_operator(mesh);
  for (std::size_t i = 0; i < 3; ++i) {
    const Eigen::VectorXd lhs = eps * (op * species_field(w_out, i)) + species_field(at_in.values, i);
    EXPECT_LT(lhs.cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Newton, ConstantStateIsImmediate) {
  const TwoCellSetup s;
  const Mesh mesh = build_cartesian(4, 4, 1.0, 1.0);
  const State prev(2, 16, 0.8);
  const auto [next, report] = newton_step_solve(s.model, mesh, prev, 0.1, SolverConfig{});
  EXPECT_LE(report.newton_iters, 1);
  EXPECT_LT(max_abs_diff(next, prev), 1e-14);
}

TEST(Newton, TwoCellMatchesOracle) {
  const TwoCellSetup s;
  const auto [next, report] = newton_step_solve(s.model, s.mesh, s.prev, s.dt, SolverConfig{});
  expect_matches_frozen(next, 1e-8);
  EXPECT_LE(report.residual_norm, SolverConfig{}.newton_tol);
}

TEST(Newton, ThrowsWhenIterationsRunOut) {
  std::mt19937_64 rng(61);
  const Mesh mesh = build_cartesian(6, 6, 1.0, 1.0);
  const ModelData m = build_model(InteractionMatrix{oracle::random_db_matrix(rng, 2), 0.01});
  const State prev = oracle::random_state(rng, 2, mesh.num_cells(), 5.0);
  SolverConfig cfg;
  cfg.max_newton_iters = 1;
  EXPECT_THROW(newton_step_solve(m, mesh, prev, 1.0, cfg), NoConvergence);
}

TEST(Continuation, ConstantStateStaysPut) {
  const TwoCellSetup s;
  const Mesh mesh = build_cartesian(3, 3, 1.0, 1.0);
  const State prev(2, 9, 0.5);
  const auto [next, report] = epsilon_continuation_solve(s.model, mesh, prev, 0.1, SolverConfig{});
  EXPECT_LT(max_abs_diff(next, prev), SolverConfig{}.newton_tol);
  ASSERT_EQ(report.eps_path.size(), SolverConfig{}.eps_ladder.size());
  for (const auto& rung : report.eps_path) EXPECT_TRUE(rung.converged);
}

TEST(Continuation, TwoCellMatchesOracle) {
  const TwoCellSetup s;
  const auto [next, report] = epsilon_continuation_solve(s.model, s.mesh, s.prev, s.dt, SolverConfig{});
  expect_matches_frozen(next, 1e-8);
  EXPECT_FALSE(report.eps_path.empty());
  const auto [newton, unused] = newton_step_solve(s.model, s.mesh, s.prev, s.dt, SolverConfig{});
  EXPECT_LT(max_abs_diff(next, newton), 1e-8);
}

TEST(Continuation, LadderChoiceDoesNotChangeResult) {
  std::mt19937_64 rng(67);
  const Mesh mesh = build_cartesian(4, 4, 1.0, 1.0);
  const ModelData m = build_model(InteractionMatrix{oracle::random_db_matrix(rng, 2), 0.3});
  const State prev = oracle::random_state(rng, 2, mesh.num_cells());
  SolverConfig short_ladder;
  short_ladder.eps_ladder = {1e-6, 0.0};
  const auto [a, ra] = epsilon_continuation_solve(m, mesh, prev, 0.01, SolverConfig{});
  const auto [b, rb] = epsilon_continuation_solve(m, mesh, prev, 0.01, short_ladder);
  EXPECT_LT(max_abs_diff(a, b), 1e-8);
}

TEST(Continuation, RungEnergyStaysBelowInitialEntropy) {
  std::mt19937_64 rng(71);
  const Mesh mesh = build_cartesian(5, 5, 1.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const ModelData m = build_model(InteractionMatrix{oracle::random_db_matrix(rng, 2 + trial % 2), 0.2});
    const State prev = oracle::random_state(rng, m.n(), mesh.num_cells());
    const auto [next, report] = epsilon_continuation_solve(m, mesh, prev, 0.02, SolverConfig{});
    ASSERT_FALSE(report.eps_path.empty());
    EXPECT_TRUE(report.eps_path.back().converged);
    for (const auto& rung : report.eps_path)
      if (rung.converged) EXPECT_LE(rung.energy, rung.energy_bound + 1e-8) << "eps " << rung.eps;
  }
}

TEST(Advance, ConstantStateIsStationary) {
  const TwoCellSetup s;
  const Mesh mesh = build_cartesian(4, 2, 1.0, 1.0);
  const State prev(2, 8, 1.1);
  for (double dt : {1e-3, 0.1, 10.0}) {
    const auto [next, report] = advance(s.model, mesh, prev, dt, SolverConfig{});
    EXPECT_NEAR(report.entropy_before, report.entropy_after, 1e-13);
    EXPECT_EQ(report.dissipation_gradient_term, 0.0);
    EXPECT_EQ(report.dissipation_pressure_term, 0.0);
    EXPECT_TRUE(report.entropy_inequality_satisfied);
  }
}

TEST(Advance, TwoCellStepIsCertified) {
  const TwoCellSetup s;
  const auto [next, report] = advance(s.model, s.mesh, s.prev, s.dt, SolverConfig{});
  expect_matches_frozen(next, 1e-8);
  EXPECT_TRUE(report.entropy_inequality_satisfied);
  EXPECT_LE(report.entropy_after + report.dissipation_gradient_term + report.dissipation_pressure_term,
            report.entropy_before + report.entropy_tolerance);
  EXPECT_GE(report.min_value, 0.0);
  EXPECT_LE(report.max_mass_drift, 1e-10);
  EXPECT_EQ(next.time_index, 1u);
}

TEST(Advance, NegativePreviousStateIsRejected) {
  TwoCellSetup s;
  s.prev(1, 0) = -1.0;
  EXPECT_THROW(advance(s.model, s.mesh, s.prev, s.dt, SolverConfig{}), PreconditionError);
}

TEST(Advance, MismatchedStateIsRejected) {
  const TwoCellSetup s;
  EXPECT_THROW(advance(s.model, s.mesh, State(3, 2), s.dt, SolverConfig{}), PreconditionError);
  EXPECT_THROW(advance(s.model, s.mesh, s.prev, 0.0, SolverConfig{}), PreconditionError);
}

TEST(Advance, FallsBackWhenNewtonCannotConverge) {
  const TwoCellSetup s;
  SolverConfig cfg;
  cfg.max_newton_iters = 1;
  const auto [next, report] = advance(s.model, s.mesh, s.prev, s.dt, cfg);
  EXPECT_TRUE(report.fallback_used);
  EXPECT_FALSE(report.eps_path.empty());
  expect_matches_frozen(next, 1e-8);
}

TEST(Advance, RandomStepsPreserveInvariants) {
  std::mt19937_64 rng(73);
  const Mesh mesh = build_cartesian(6, 5, 1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelData m = build_model(InteractionMatrix{oracle::random_db_matrix(rng, 2 + trial % 2), 0.05 + 0.1 * trial});
    const State prev = oracle::random_state(rng, m.n(), mesh.num_cells());
    const auto [next, report] = advance(m, mesh, prev, 0.01, SolverConfig{});
    for (double v : next.values()) EXPECT_GE(v, 0.0);
    const auto before = mass_per_species(mesh, prev);
    const auto after = mass_per_species(mesh, next);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-10 * before[i]);
    EXPECT_TRUE(report.entropy_inequality_satisfied) << "slack " << report.entropy_slack;
  }
}

TEST(Advance, Deterministic) {
  std::mt19937_64 rng(79);
  const Mesh mesh = build_cartesian(5, 4, 1.0, 1.0);
  const ModelData m = build_model(InteractionMatrix{oracle::random_db_matrix(rng, 3), 0.2});
  const State prev = oracle::random_state(rng, 3, mesh.num_cells());
  const auto [a, ra] = advance(m, mesh, prev, 0.02, SolverConfig{});
  const auto [b, rb] = advance(m, mesh, prev, 0.02, SolverConfig{});
  EXPECT_EQ(a, b);
  EXPECT_EQ(ra.newton_iters, rb.newton_iters);
  EXPECT_EQ(ra.residual_norm, rb.residual_norm);
  EXPECT_EQ(ra.entropy_after, rb.entropy_after);
  EXPECT_EQ(ra.entropy_slack, rb.entropy_slack);
}
