#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "crossdiff/mesh.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/state.hpp"

namespace crossdiff {

struct RunConfig;

/// Terms of the discrete entropy production inequality for one step:
///   H_next + grad_term + pressure_term <= H_prev (+ tolerance).
struct EntropyCertificate {
  double h_prev = 0.0;
  double h_next = 0.0;
  /// dt lambda sum_i sum_sigma tau (D_sigma u_i)^2.
  double grad_term = 0.0;
  /// (dt/delta) sum_i sum_sigma tau pi_i ubar_{i,sigma} (D_sigma p_i)^2.
  double pressure_term = 0.0;
  /// h_prev - h_next - grad_term - pressure_term.
  double slack = 0.0;
  double tolerance = 0.0;
  bool satisfied = false;
};

EntropyCertificate entropy_certificate(const ModelData& model, const Mesh& mesh, const State& prev, const State& next,
                                       double dt, double tolerance);

/// M_i = sum_K m(K) u_{i,K}.
std::vector<double> mass_per_species(const Mesh& mesh, const State& state);

/// Row of the per-run audit trail. Row k = 0 describes the initial state.
struct LedgerRow {
  std::size_t k = 0;
  double t = 0.0;
  double h = 0.0;
  double grad_term = 0.0;
  double pressure_term = 0.0;
  double slack = 0.0;
  double tolerance = 0.0;
  std::vector<double> masses;
  double min_value = 0.0;
  int newton_iters = 0;
  bool fallback_used = false;
};

struct EntropyLedger {
  std::vector<LedgerRow> rows;

  /// Every step satisfied its certificate and H_k <= H_{k-1} + tolerance_k.
  bool certified() const;
};

/// (x, y, t) -> phi.
using TestFunction = std::function<double(double, double, double)>;

/// max_i | sum_k sum_K m(K) (u^k_{i,K} - u^{k-1}_{i,K}) phi(x_K, t_k) |, with
/// t_k = k dt and trajectory[k] the state at t_k.
double weak_bv_functional(const Mesh& mesh, const std::vector<State>& trajectory, double dt, const TestFunction& phi);

/// sum_sigma tau (D_sigma v)^2.
double discrete_gradient_norm_sq(const Mesh& mesh, const Eigen::VectorXd& v);

/// Per-species L2 norm of the difference of two piecewise-constant fields on
/// nested Cartesian meshes, integrated exactly over the fine cells. Throws
/// MeshNotNested.
std::vector<double> l2_difference(const Mesh& coarse_mesh, const State& coarse, const Mesh& fine_mesh,
                                  const State& fine);

struct ConvergenceLevel {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double h = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  /// weak_bv_functional(phi = sin(pi x) sin(pi y)) / sup |grad phi|.
  double weak_bv_ratio = 0.0;
};

struct ConvergenceRow {
  std::size_t level = 0;
  /// L2 difference between the final states of this level and the next finer one.
  std::vector<double> l2_diff;
  /// log2(previous row diff / this diff); NaN on the first row.
  std::vector<double> order;
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;
  std::vector<ConvergenceRow> rows;
};

/// Self-convergence study: nx, ny doubled and dt halved per level, each level
/// run to t_final with fully certified ledgers.
ConvergenceReport refinement_study(const RunConfig& base, std::size_t levels);

}  // namespace crossdiff
