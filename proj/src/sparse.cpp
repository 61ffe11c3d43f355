#include "crossdiff/sparse.hpp"

#include <Eigen/SparseLU>

#include <fmt/format.h>

#include "crossdiff/errors.hpp"

namespace crossdiff {

Eigen::SparseMatrix<double> SparseSystem::matrix() const {
  const auto n = static_cast<Eigen::Index>(size);
  Eigen::SparseMatrix<double> a(n, n);
  for (const auto& t : entries)
    if (t.row() < 0 || t.row() >= n || t.col() < 0 || t.col() >= n)
      throw PreconditionError(fmt::format("sparse entry ({}, {}) out of range for size {}", t.row(), t.col(), size));
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  return a;
}

void SparseSystem::compress() {
  const auto a = matrix();
  entries.clear();
  entries.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (Eigen::Index col = 0; col < a.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it)
      entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
}

Eigen::VectorXd solve_sparse(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b) {
  if (a.rows() != a.cols()) throw PreconditionError("solve_sparse: matrix must be square");
  if (b.size() != a.rows()) throw PreconditionError("solve_sparse: right-hand side has the wrong length");
  if (a.rows() == 0) return {};

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw Singular("sparse LU factorization failed: " + lu.lastErrorMessage());

  const double bnorm = b.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(b.size());

  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw Singular("sparse LU solve failed");
  double rel = (a * x - b).norm() / bnorm;
  for (int refine = 0; refine < 2 && rel > 1e-14; ++refine) {
    x += lu.solve(b - a * x);
    rel = (a * x - b).norm() / bnorm;
  }
  if (!(rel <= 1e-12)) throw Singular(fmt::format("relative residual {:.3g} exceeds 1e-12", rel));
  return x;
}

Eigen::VectorXd solve_sparse(const SparseSystem& system) { return solve_sparse(system.matrix(), system.rhs); }

}  // namespace crossdiff
