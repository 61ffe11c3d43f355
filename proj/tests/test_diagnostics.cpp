#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "crossdiff/diagnostics.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/scheme.hpp"
#include "crossdiff/solver.hpp"
#include "support/oracles.hpp"

using namespace crossdiff;

namespace {

ModelData model2(double a11, double a12, double a21, double a22, double delta) {
  Eigen::MatrixXd a(2, 2);
  a << a11, a12, a21, a22;
  return build_model(InteractionMatrix{a, delta});
}

State two_cell(double u1_c0, double u2_c0, double u1_c1, double u2_c1) {
  State s(2, 2);
  s(0, 0) = u1_c0;
  s(1, 0) = u2_c0;
  s(0, 1) = u1_c1;
  s(1, 1) = u2_c1;
  return s;
}

}  // namespace

TEST(Certificate, ConstantStateHasZeroSlack) {
  const ModelData m = model2(2, 1, 1, 2, 1.0);
  const Mesh mesh = build_cartesian(3, 3, 1.0, 1.0);
  const State s(2, 9, 0.4);
  const EntropyCertificate c = entropy_certificate(m, mesh, s, s, 0.1, 1e-9);
  EXPECT_EQ(c.h_prev, c.h_next);
  EXPECT_EQ(c.grad_term, 0.0);
  EXPECT_EQ(c.pressure_term, 0.0);
  EXPECT_EQ(c.slack, 0.0);
  EXPECT_TRUE(c.satisfied);
}

TEST(Certificate, TwoCellOracleStepSatisfies) {
  const ModelData m = model2(2, 1, 1, 2, 1.0);
  const Mesh mesh = build_cartesian(2, 1, 1.0, 1.0);
  const State prev = two_cell(1, 0, 0, 1);
  const auto o = oracle::TwoCellProblem::solve();
  const State next = two_cell(o[0], o[1], o[2], o[3]);
  const EntropyCertificate c = entropy_certificate(m, mesh, prev, next, 0.1, 10.0 * SolverConfig{}.newton_tol);
  EXPECT_TRUE(c.satisfied) << "slack " << c.slack;
  EXPECT_GT(c.grad_term, 0.0);
}

TEST(Certificate, HandEvaluationOnTwoCells) {
  // pi = (1, 1/2), lambda = 2 - sqrt(2), tau = 2, areas 1/2.
  const double delta = 2.0, dt = 0.3;
  const ModelData m = model2(3, 1, 2, 2, delta);
  const Mesh mesh = build_cartesian(2, 1, 1.0, 1.0);
  const State prev = two_cell(0.9, 0.1, 0.3, 1.2);
  const State next = two_cell(0.2, 0.7, 1.5, 0.4);
  const double a[2][2] = {{3, 1}, {2, 2}};
  const double pi[2] = {1.0, 0.5};
  auto h = [&](double u1, double u2) {
    const double u[2] = {u1, u2};
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += pi[i] * a[i][j] * u[i] * u[j];
    return s / (2.0 * delta);
  };
  const double h_prev = 0.5 * h(0.9, 0.1) + 0.5 * h(0.3, 1.2);
  const double h_next = 0.5 * h(0.2, 0.7) + 0.5 * h(1.5, 0.4);
  const double lambda = 2.0 - std::sqrt(2.0);
  const double du[2] = {1.5 - 0.2, 0.4 - 0.7};
  const double grad = dt * lambda * 2.0 * (du[0] * du[0] + du[1] * du[1]);
  const double c0[2] = {0.2, 0.7}, c1[2] = {1.5, 0.4};
  double press = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double dp = a[i][0] * (c1[0] - c0[0]) + a[i][1] * (c1[1] - c0[1]);
    press += 2.0 * pi[i] * std::min(c0[i], c1[i]) * dp * dp;
  }
  press *= dt / delta;

  const EntropyCertificate c = entropy_certificate(m, mesh, prev, next, dt, 1e-9);
  EXPECT_NEAR(c.h_prev, h_prev, 1e-14);
  EXPECT_NEAR(c.h_next, h_next, 1e-14);
  EXPECT_NEAR(c.grad_term, grad, 1e-13);
  EXPECT_NEAR(c.pressure_term, press, 1e-13);
  EXPECT_NEAR(c.slack, h_prev - h_next - grad - press, 1e-13);
  EXPECT_EQ(c.satisfied, c.slack >= -1e-9);
}

TEST(Mass, Examples) {
  EXPECT_NEAR(mass_per_species(build_cartesian(4, 4, 1.0, 1.0), State(2, 16, 0.3))[1], 0.3, 1e-15);
  const auto m = mass_per_species(build_cartesian(2, 1, 1.0, 1.0), two_cell(2, 0, 0, 0));
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 0.0);
}

TEST(WeakBV, ConstantTrajectoryIsZero) {
  const Mesh mesh = build_cartesian(3, 3, 1.0, 1.0);
  const std::vector<State> traj(4, State(2, 9, 0.6));
  EXPECT_EQ(weak_bv_functional(mesh, traj, 0.1, [](double x, double y, double t) { return x * y + t; }), 0.0);
}

TEST(WeakBV, TwoStateHandValue) {
  const Mesh mesh = build_cartesian(2, 1, 1.0, 1.0);
  const std::vector<State> traj{two_cell(1, 0, 0, 1), two_cell(0.6, 0.2, 0.4, 0.8)};
  // species 1: 0.5(-0.4)(0.75) + 0.5(0.4)(1.25) = 0.1; species 2: |-0.05|.
  const double v = weak_bv_functional(mesh, traj, 0.5, [](double x, double, double t) { return x + t; });
  EXPECT_NEAR(v, 0.1, 1e-15);
}

TEST(GradientNorm, Examples) {
  const Mesh two = build_cartesian(2, 1, 1.0, 1.0);
  EXPECT_EQ(discrete_gradient_norm_sq(two, Eigen::Vector2d(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(discrete_gradient_norm_sq(two, Eigen::Vector2d(1, 0)), 2.0);
}

TEST(L2Difference, Examples) {
  const Mesh m4 = build_cartesian(4, 4, 1.0, 1.0);
  std::mt19937_64 rng(83);
  const State s = oracle::random_state(rng, 2, 16);
  for (double d : l2_difference(m4, s, m4, s)) EXPECT_EQ(d, 0.0);

  const Mesh m2 = build_cartesian(2, 2, 1.0, 1.0);
  const auto ones = l2_difference(m2, State(2, 4, 1.0), m4, State(2, 16, 0.0));
  EXPECT_NEAR(ones[0], 1.0, 1e-15);
  EXPECT_NEAR(ones[1], 1.0, 1e-15);

  const Mesh m1 = build_cartesian(1, 1, 1.0, 1.0);
  State fine(1, 4);
  fine(0, 0) = fine(0, 1) = 1.0;
  EXPECT_NEAR(l2_difference(m1, State(1, 1, 1.0), m2, fine)[0], std::sqrt(0.5), 1e-15);
}

TEST(L2Difference, ProlongationIsExact) {
  // A coarse field copied onto the fine cells it covers has zero difference.
  std::mt19937_64 rng(89);
  const Mesh coarse = build_cartesian(3, 2, 1.0, 1.0);
  const Mesh fine = build_cartesian(6, 4, 1.0, 1.0);
  const State c = oracle::random_state(rng, 2, coarse.num_cells());
  State f(2, fine.num_cells());
  for (std::size_t iy = 0; iy < 4; ++iy)
    for (std::size_t ix = 0; ix < 6; ++ix)
      for (std::size_t i = 0; i < 2; ++i) f(i, iy * 6 + ix) = c(i, (iy / 2) * 3 + ix / 2);
  for (double d : l2_difference(coarse, c, fine, f)) EXPECT_NEAR(d, 0.0, 1e-15);
}

TEST(L2Difference, RejectsUnnestedMeshes) {
  const Mesh m2 = build_cartesian(2, 2, 1.0, 1.0);
  const Mesh m3 = build_cartesian(3, 3, 1.0, 1.0);
  EXPECT_THROW(l2_difference(m2, State(1, 4), m3, State(1, 9)), MeshNotNested);
  const Mesh wide = build_cartesian(4, 4, 2.0, 1.0);
  EXPECT_THROW(l2_difference(m2, State(1, 4), wide, State(1, 16)), MeshNotNested);
  const Mesh loaded = load_mesh(write_mesh(build_cartesian(4, 4, 1.0, 1.0)));
  EXPECT_THROW(l2_difference(m2, State(1, 4), loaded, State(1, 16)), MeshNotNested);
}

TEST(Ledger, CertifiedChecksSlackAndMonotonicity) {
  EntropyLedger ledger;
  ledger.rows.resize(3);
  ledger.rows[0].h = 2.0;
  ledger.rows[1].h = 1.5;
  ledger.rows[1].tolerance = 1e-9;
  ledger.rows[2].h = 1.0;
  ledger.rows[2].tolerance = 1e-9;
  EXPECT_TRUE(ledger.certified());
  ledger.rows[2].slack = -1e-6;
  EXPECT_FALSE(ledger.certified());
  ledger.rows[2].slack = 0.0;
  ledger.rows[2].h = 1.6;
  EXPECT_FALSE(ledger.certified());
}
