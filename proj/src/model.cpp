#include "crossdiff/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "crossdiff/errors.hpp"
#include "crossdiff/mesh.hpp"
#include "crossdiff/state.hpp"

namespace crossdiff {

DetailedBalanceViolation::DetailedBalanceViolation(std::size_t i, std::size_t j, double residual)
    : Error(fmt::format("detailed balance fails for species pair ({}, {}): |pi_i a_ij - pi_j a_ji| = {:.6g}", i + 1,
                        j + 1, residual)),
      i_(i),
      j_(j),
      residual_(residual) {}

NotPositiveDefinite::NotPositiveDefinite(double lambda)
    : Error(fmt::format("smallest eigenvalue of (pi_i a_ij) is {:.6g} <= 0; the model is not entropy dissipative",
                        lambda)),
      lambda_(lambda) {}

void InteractionMatrix::check() const {
  if (a.rows() != a.cols()) throw PreconditionError("interaction matrix must be square");
  if (a.rows() < 2) throw PreconditionError("at least two species are required");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw PreconditionError("delta must be positive");
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (!(a(i, j) > 0.0) || !std::isfinite(a(i, j)))
        throw PreconditionError(fmt::format("a_{}{} = {} must be positive", i + 1, j + 1, a(i, j)));
}

namespace {

void check_pairs(const Eigen::MatrixXd& a, const Eigen::VectorXd& pi) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double lhs = pi(i) * a(i, j);
      const double rhs = pi(j) * a(j, i);
      const double residual = std::abs(lhs - rhs);
      if (!(residual <= 1e-10 * std::max(lhs, rhs)))
        throw DetailedBalanceViolation(static_cast<std::size_t>(i), static_cast<std::size_t>(j), residual);
    }
  }
}

}  // namespace

Eigen::VectorXd detailed_balance_weights(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1) throw PreconditionError("detailed_balance_weights: square matrix required");
  if ((a.array() <= 0.0).any()) throw PreconditionError("detailed_balance_weights: entries must be positive");

  // Star spanning tree rooted at species 1: pi_1 a_1j = pi_j a_j1.
  Eigen::VectorXd pi(a.rows());
  pi(0) = 1.0;
  for (Eigen::Index j = 1; j < a.rows(); ++j) pi(j) = a(0, j) / a(j, 0);
  check_pairs(a, pi);
  return pi;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw NotSymmetric("matrix is not square");
  const Eigen::Index n = m.rows();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale)
        throw NotSymmetric(fmt::format("entries ({0},{1}) and ({1},{0}) differ by {2:.3g}", i + 1, j + 1,
                                       std::abs(m(i, j) - m(j, i))));

  Eigen::MatrixXd s = 0.5 * (m + m.transpose());
  const double frob = s.norm();

  // Cyclic sweeps of plane rotations until the off-diagonal part is
  // negligible relative to the whole matrix.
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (std::sqrt(2.0 * off) <= 1e-15 * frob) break;

    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = s(p, q);
        if (apq == 0.0) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
        // Smaller root of t^2 + 2 theta t - 1 = 0.
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double skp = s(k, p);
          const double skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double spk = s(p, k);
          const double sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        s(p, q) = 0.0;
        s(q, p) = 0.0;
      }
    }
  }

  Eigen::VectorXd eig = s.diagonal();
  std::sort(eig.data(), eig.data() + eig.size());
  return eig;
}

double smallest_eigenvalue_sym(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) throw PreconditionError("smallest_eigenvalue_sym: empty matrix");
  return symmetric_eigenvalues(m)(0);
}

ModelData build_model(const InteractionMatrix& matrix, const std::optional<Eigen::VectorXd>& pi_override) {
  matrix.check();
  ModelData model;
  model.matrix = matrix;
  if (pi_override) {
    if (pi_override->size() != matrix.a.rows()) throw PreconditionError("pi override has the wrong length");
    if ((pi_override->array() <= 0.0).any()) throw PreconditionError("pi override entries must be positive");
    check_pairs(matrix.a, *pi_override);
    model.pi = *pi_override;
  } else {
    model.pi = detailed_balance_weights(matrix.a);
  }

  const Eigen::MatrixXd weighted = model.pi.asDiagonal() * matrix.a;
  model.sym = 0.5 * (weighted + weighted.transpose());
  model.lambda = smallest_eigenvalue_sym(model.sym);
  if (!(model.lambda > 0.0)) throw NotPositiveDefinite(model.lambda);

  model.entropy_transform = model.sym / matrix.delta;
  model.entropy_transform_inv = model.entropy_transform.ldlt().solve(
      Eigen::MatrixXd::Identity(matrix.a.rows(), matrix.a.cols()));
  return model;
}

Eigen::VectorXd pressure(const ModelData& model, const Eigen::VectorXd& u) { return model.a() * u; }

double entropy_density(const ModelData& model, const Eigen::VectorXd& u) {
  return u.dot(model.sym * u) / (2.0 * model.delta());
}

Eigen::VectorXd primal_to_entropy(const ModelData& model, const Eigen::VectorXd& u) {
  return model.entropy_transform * u;
}

Eigen::VectorXd entropy_to_primal(const ModelData& model, const Eigen::VectorXd& w) {
  return model.entropy_transform_inv * w;
}

double total_entropy(const ModelData& model, const Mesh& mesh, const State& state) {
  if (state.cells() != mesh.num_cells() || state.species() != model.n())
    throw PreconditionError("total_entropy: state dimensions do not match mesh and model");
  double total = 0.0;
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const auto u = state.cell(k);
    total += mesh.cells[k].area * u.dot(model.sym * u) / (2.0 * model.delta());
  }
  return total;
}

}  // namespace crossdiff
