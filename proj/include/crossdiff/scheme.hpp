#pragma once

#include <cstddef>

#include "crossdiff/mesh.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/sparse.hpp"
#include "crossdiff/state.hpp"

namespace crossdiff {

/// Per-cell, per-species scheme residual R_{i,K} and its max-abs norm.
struct Residual {
  State values;
  double norm = 0.0;
};

/// min(uK, uL).
inline double upwind_value(double uk, double ul) { return uk < ul ? uk : ul; }

/// min(uK^+, uL^+).
inline double upwind_value_pos(double uk, double ul) {
  return upwind_value(uk > 0.0 ? uk : 0.0, ul > 0.0 ? ul : 0.0);
}

/// F_{i,K,sigma} = -tau (delta D_{K,sigma} u_i + ubar_{i,sigma} D_{K,sigma} p_i)
/// with the clipped upwind value; zero on exterior edges.
double flux(const ModelData& model, const Mesh& mesh, const State& state, std::size_t species, std::size_t edge,
            std::size_t owner);

/// R_{i,K} = m(K)/dt (cand - prev) + sum_{sigma in E_K} F_{i,K,sigma}(cand).
Residual residual(const ModelData& model, const Mesh& mesh, const State& prev, const State& cand, double dt);

/// Regularized residual in entropy variables:
///   eps (sum_sigma tau (w_K - w_L) + m(K) w_K) + m(K)/dt (u(w) - prev) + sum_sigma F^+(u(w)).
/// The eps term is eps times the discrete (-Laplacian + identity), whose
/// quadratic form is the squared discrete H1 norm.
Residual residual_regularized(const ModelData& model, const Mesh& mesh, const State& w, const State& prev, double dt,
                              double eps);

/// Cellwise u = W^{-1} w and w = W u.
State to_primal(const ModelData& model, const State& w);
State to_entropy(const ModelData& model, const State& u);

/// Derivative of residual() with respect to cand, upwind selectors frozen at
/// cand (ties select the owner cell; the positive part is differentiated as
/// 1 for z > 0 and 0 otherwise). rhs is left empty. Unknowns are ordered
/// species-major within cell.
SparseSystem jacobian(const ModelData& model, const Mesh& mesh, const State& prev, const State& cand, double dt);

/// sum_sigma tau (D_sigma v)^2 + sum_K m(K) v_K^2.
double discrete_h1_norm_sq(const Mesh& mesh, const Eigen::VectorXd& v);

/// Scalar operator sum_sigma tau (v_K - v_L) + m(K) v_K as a sparse matrix.
Eigen::SparseMatrix<double> h1_operator(const Mesh& mesh);

/// Species i of `state` as a per-cell vector.
Eigen::VectorXd species_field(const State& state, std::size_t species);

}  // namespace crossdiff
