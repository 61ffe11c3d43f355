#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace crossdiff {

struct Mesh;
class State;

/// Interaction data (a_ij) and the common diffusion coefficient delta.
struct InteractionMatrix {
  Eigen::MatrixXd a;
  double delta = 1.0;

  std::size_t n() const { return static_cast<std::size_t>(a.rows()); }

  /// Throws PreconditionError unless n >= 2, a is square, a_ij > 0, delta > 0.
  void check() const;
};

/// Everything derived from the interaction matrix that the scheme needs.
/// Immutable after build_model.
struct ModelData {
  InteractionMatrix matrix;
  /// Detailed-balance weights, normalized to pi_1 = 1 unless overridden.
  Eigen::VectorXd pi;
  /// Smallest eigenvalue of sym.
  double lambda = 0.0;
  /// M_ij = pi_i a_ij, symmetrized.
  Eigen::MatrixXd sym;
  /// W = M / delta maps densities to entropy variables; w_i = (pi_i/delta) p_i(u).
  Eigen::MatrixXd entropy_transform;
  Eigen::MatrixXd entropy_transform_inv;

  std::size_t n() const { return matrix.n(); }
  double delta() const { return matrix.delta; }
  const Eigen::MatrixXd& a() const { return matrix.a; }
  /// Constant c with h(u) >= c |u|^2, namely lambda / (2 delta).
  double coercivity_constant() const { return lambda / (2.0 * matrix.delta); }
};

/// pi with pi_1 = 1 and pi_j = a_1j / a_j1, then every pair checked:
/// |pi_i a_ij - pi_j a_ji| <= 1e-10 max(pi_i a_ij, pi_j a_ji).
/// Throws DetailedBalanceViolation naming the first offending pair.
Eigen::VectorXd detailed_balance_weights(const Eigen::MatrixXd& a);

/// All eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

/// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi rotations).
/// Throws NotSymmetric when |m_ij - m_ji| > 1e-12 max(1, max |m_kl|).
double smallest_eigenvalue_sym(const Eigen::MatrixXd& m);

/// Throws DetailedBalanceViolation or NotPositiveDefinite. An explicit
/// `pi_override` replaces the computed weights after the same pairwise check.
ModelData build_model(const InteractionMatrix& matrix,
                      const std::optional<Eigen::VectorXd>& pi_override = std::nullopt);

/// p_i = sum_j a_ij u_j.
Eigen::VectorXd pressure(const ModelData& model, const Eigen::VectorXd& u);

/// h(u) = (1 / 2 delta) sum_ij pi_i a_ij u_i u_j.
double entropy_density(const ModelData& model, const Eigen::VectorXd& u);

/// w = W u.
Eigen::VectorXd primal_to_entropy(const ModelData& model, const Eigen::VectorXd& u);
/// u = W^{-1} w.
Eigen::VectorXd entropy_to_primal(const ModelData& model, const Eigen::VectorXd& w);

/// sum_K m(K) h(u_K).
double total_entropy(const ModelData& model, const Mesh& mesh, const State& state);

}  // namespace crossdiff
