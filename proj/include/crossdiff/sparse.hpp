#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace crossdiff {

/// Square sparse linear system A x = b in triplet form.
struct SparseSystem {
  std::size_t size = 0;
  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd rhs;

  void add(std::size_t row, std::size_t col, double value) {
    entries.emplace_back(static_cast<int>(row), static_cast<int>(col), value);
  }

  /// Sums duplicate (row, col) pairs and sorts entries column-major.
  void compress();

  Eigen::SparseMatrix<double> matrix() const;
};

/// Direct sparse LU solve with up to two steps of iterative refinement.
/// Throws Singular when the factorization breaks down or the relative
/// residual |Ax - b| / |b| stays above 1e-12.
Eigen::VectorXd solve_sparse(const SparseSystem& system);
Eigen::VectorXd solve_sparse(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b);

}  // namespace crossdiff
