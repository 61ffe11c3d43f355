#include "crossdiff/scheme.hpp"

#include <cmath>

#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

void check_dims(const ModelData& model, const Mesh& mesh, const State& s, const char* what) {
  if (s.species() != model.n() || s.cells() != mesh.num_cells())
    throw PreconditionError(std::string(what) + ": state dimensions do not match mesh and model");
}

// p_{i,K} for every cell, stored like a State.
State pressures(const ModelData& model, const State& u) {
  State p(u.species(), u.cells());
  for (std::size_t k = 0; k < u.cells(); ++k) p.cell(k) = model.a() * u.cell(k);
  return p;
}

double max_abs(const State& s) {
  double m = 0.0;
  for (double v : s.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

double flux(const ModelData& model, const Mesh& mesh, const State& state, std::size_t species, std::size_t edge,
            std::size_t owner) {
  check_dims(model, mesh, state, "flux");
  if (edge >= mesh.num_edges()) throw PreconditionError("flux: edge index out of range");
  const Edge& e = mesh.edges[edge];
  if (owner != e.owner && !(e.is_interior() && static_cast<std::ptrdiff_t>(owner) == e.neighbor))
    throw PreconditionError("flux: edge does not bound the given cell");
  if (!e.is_interior()) return 0.0;

  const std::size_t other = e.other(owner);
  const double du = state(species, other) - state(species, owner);
  const double dp = model.a().row(static_cast<Eigen::Index>(species)).dot(state.cell(other) - state.cell(owner));
  const double ubar = upwind_value_pos(state(species, owner), state(species, other));
  return -e.transmissibility * (model.delta() * du + ubar * dp);
}

Residual residual(const ModelData& model, const Mesh& mesh, const State& prev, const State& cand, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("residual: dt must be positive");
  check_dims(model, mesh, prev, "residual");
  check_dims(model, mesh, cand, "residual");

  const std::size_t n = model.n();
  const double delta = model.delta();
  const State p = pressures(model, cand);
  Residual r{State(n, mesh.num_cells()), 0.0};

  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const double mk = mesh.cells[k].area / dt;
    for (std::size_t i = 0; i < n; ++i) r.values(i, k) = mk * (cand(i, k) - prev(i, k));
    for (std::size_t s = 0; s < mesh.interior_edge_count[k]; ++s) {
      const Edge& e = mesh.edges[mesh.cell_edges[k][s]];
      const std::size_t l = e.other(k);
      for (std::size_t i = 0; i < n; ++i) {
        const double du = cand(i, l) - cand(i, k);
        const double dp = p(i, l) - p(i, k);
        const double ubar = upwind_value_pos(cand(i, k), cand(i, l));
        r.values(i, k) += -e.transmissibility * (delta * du + ubar * dp);
      }
    }
  }
  r.norm = max_abs(r.values);
  return r;
}

State to_primal(const ModelData& model, const State& w) {
  State u(w.species(), w.cells());
  for (std::size_t k = 0; k < w.cells(); ++k) u.cell(k) = model.entropy_transform_inv * w.cell(k);
  u.time_index = w.time_index;
  return u;
}

State to_entropy(const ModelData& model, const State& u) {
  State w(u.species(), u.cells());
  for (std::size_t k = 0; k < u.cells(); ++k) w.cell(k) = model.entropy_transform * u.cell(k);
  w.time_index = u.time_index;
  return w;
}

Residual residual_regularized(const ModelData& model, const Mesh& mesh, const State& w, const State& prev, double dt,
                              double eps) {
  if (!(eps >= 0.0)) throw PreconditionError("residual_regularized: eps must be nonnegative");
  check_dims(model, mesh, w, "residual_regularized");
  Residual r = residual(model, mesh, prev, to_primal(model, w), dt);
  if (eps == 0.0) return r;

  const std::size_t n = model.n();
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double op = mesh.cells[k].area * w(i, k);
      for (std::size_t s = 0; s < mesh.interior_edge_count[k]; ++s) {
        const Edge& e = mesh.edges[mesh.cell_edges[k][s]];
        op += e.transmissibility * (w(i, k) - w(i, e.other(k)));
      }
      r.values(i, k) += eps * op;
    }
  }
  r.norm = max_abs(r.values);
  return r;
}

SparseSystem jacobian(const ModelData& model, const Mesh& mesh, const State& prev, const State& cand, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("jacobian: dt must be positive");
  check_dims(model, mesh, prev, "jacobian");
  check_dims(model, mesh, cand, "jacobian");

  const std::size_t n = model.n();
  const double delta = model.delta();
  const auto& a = model.a();
  const State p = pressures(model, cand);

  SparseSystem sys;
  sys.size = n * mesh.num_cells();
  sys.entries.reserve(sys.size * n * 5);

  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const double mk = mesh.cells[k].area / dt;
    for (std::size_t i = 0; i < n; ++i) sys.add(k * n + i, k * n + i, mk);

    for (std::size_t s = 0; s < mesh.interior_edge_count[k]; ++s) {
      const Edge& e = mesh.edges[mesh.cell_edges[k][s]];
      const std::size_t l = e.other(k);
      const double tau = e.transmissibility;
      for (std::size_t i = 0; i < n; ++i) {
        const double uk = cand(i, k);
        const double ul = cand(i, l);
        const double ukp = uk > 0.0 ? uk : 0.0;
        const double ulp = ul > 0.0 ? ul : 0.0;
        const bool pick_owner = ukp <= ulp;
        const double ubar = pick_owner ? ukp : ulp;
        const double sel_k = (pick_owner && uk > 0.0) ? 1.0 : 0.0;
        const double sel_l = (!pick_owner && ul > 0.0) ? 1.0 : 0.0;
        const double dp = p(i, l) - p(i, k);

        for (std::size_t j = 0; j < n; ++j) {
          const double aij = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          const double diag = (i == j) ? 1.0 : 0.0;
          sys.add(k * n + i, k * n + j, tau * (delta * diag + ubar * aij) - tau * diag * sel_k * dp);
          sys.add(k * n + i, l * n + j, -tau * (delta * diag + ubar * aij) - tau * diag * sel_l * dp);
        }
      }
    }
  }
  sys.compress();
  return sys;
}

double discrete_h1_norm_sq(const Mesh& mesh, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != mesh.num_cells())
    throw PreconditionError("discrete_h1_norm_sq: field has the wrong length");
  double sum = 0.0;
  for (const auto& e : mesh.edges) {
    if (!e.is_interior()) continue;
    const double d = v(static_cast<Eigen::Index>(e.neighbor)) - v(static_cast<Eigen::Index>(e.owner));
    sum += e.transmissibility * d * d;
  }
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const double vk = v(static_cast<Eigen::Index>(k));
    sum += mesh.cells[k].area * vk * vk;
  }
  return sum;
}

Eigen::SparseMatrix<double> h1_operator(const Mesh& mesh) {
  SparseSystem sys;
  sys.size = mesh.num_cells();
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) sys.add(k, k, mesh.cells[k].area);
  for (const auto& e : mesh.edges) {
    if (!e.is_interior()) continue;
    const auto l = static_cast<std::size_t>(e.neighbor);
    sys.add(e.owner, e.owner, e.transmissibility);
    sys.add(l, l, e.transmissibility);
    sys.add(e.owner, l, -e.transmissibility);
    sys.add(l, e.owner, -e.transmissibility);
  }
  return sys.matrix();
}

Eigen::VectorXd species_field(const State& state, std::size_t species) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(state.cells()));
  for (std::size_t k = 0; k < state.cells(); ++k) v(static_cast<Eigen::Index>(k)) = state(species, k);
  return v;
}

}  // namespace crossdiff
