#include "crossdiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "crossdiff/errors.hpp"
#include "crossdiff/scheme.hpp"

namespace crossdiff {

EntropyCertificate entropy_certificate(const ModelData& model, const Mesh& mesh, const State& prev, const State& next,
                                       double dt, double tolerance) {
  if (!(dt > 0.0)) throw PreconditionError("entropy_certificate: dt must be positive");
  EntropyCertificate c;
  c.h_prev = total_entropy(model, mesh, prev);
  c.h_next = total_entropy(model, mesh, next);
  if (next.cells() != mesh.num_cells() || next.species() != model.n())
    throw PreconditionError("entropy_certificate: state dimensions do not match");

  const std::size_t n = model.n();
  double grad = 0.0;
  double press = 0.0;
  for (const auto& e : mesh.edges) {
    if (!e.is_interior()) continue;
    const auto k = e.owner;
    const auto l = static_cast<std::size_t>(e.neighbor);
    const Eigen::VectorXd dp = model.a() * (next.cell(l) - next.cell(k));
    for (std::size_t i = 0; i < n; ++i) {
      const double du = next(i, l) - next(i, k);
      const double ubar = upwind_value_pos(next(i, k), next(i, l));
      const double dpi = dp(static_cast<Eigen::Index>(i));
      grad += e.transmissibility * du * du;
      press += e.transmissibility * model.pi(static_cast<Eigen::Index>(i)) * ubar * dpi * dpi;
    }
  }
  c.grad_term = dt * model.lambda * grad;
  c.pressure_term = dt / model.delta() * press;
  c.slack = c.h_prev - c.h_next - c.grad_term - c.pressure_term;
  c.tolerance = tolerance;
  c.satisfied = c.slack >= -tolerance;
  return c;
}

std::vector<double> mass_per_species(const Mesh& mesh, const State& state) {
  if (state.cells() != mesh.num_cells()) throw PreconditionError("mass_per_species: state does not match mesh");
  std::vector<double> m(state.species(), 0.0);
  for (std::size_t k = 0; k < mesh.num_cells(); ++k)
    for (std::size_t i = 0; i < state.species(); ++i) m[i] += mesh.cells[k].area * state(i, k);
  return m;
}

bool EntropyLedger::certified() const {
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].slack < -rows[r].tolerance) return false;
    if (rows[r].h > rows[r - 1].h + rows[r].tolerance) return false;
  }
  return true;
}

double weak_bv_functional(const Mesh& mesh, const std::vector<State>& trajectory, double dt, const TestFunction& phi) {
  if (trajectory.size() < 2) throw PreconditionError("weak_bv_functional: need at least two states");
  const std::size_t n = trajectory.front().species();
  std::vector<double> sums(n, 0.0);
  for (std::size_t k = 1; k < trajectory.size(); ++k) {
    const State& cur = trajectory[k];
    const State& old = trajectory[k - 1];
    if (cur.cells() != mesh.num_cells() || old.cells() != mesh.num_cells() || cur.species() != n)
      throw PreconditionError("weak_bv_functional: trajectory does not match mesh");
    const double t = static_cast<double>(k) * dt;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const auto& cell = mesh.cells[c];
      const double weight = cell.area * phi(cell.center.x, cell.center.y, t);
      for (std::size_t i = 0; i < n; ++i) sums[i] += weight * (cur(i, c) - old(i, c));
    }
  }
  double result = 0.0;
  for (double s : sums) result = std::max(result, std::abs(s));
  return result;
}

double discrete_gradient_norm_sq(const Mesh& mesh, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != mesh.num_cells())
    throw PreconditionError("discrete_gradient_norm_sq: field has the wrong length");
  double sum = 0.0;
  for (const auto& e : mesh.edges) {
    if (!e.is_interior()) continue;
    const double d = v(static_cast<Eigen::Index>(e.neighbor)) - v(static_cast<Eigen::Index>(e.owner));
    sum += e.transmissibility * d * d;
  }
  return sum;
}

std::vector<double> l2_difference(const Mesh& coarse_mesh, const State& coarse, const Mesh& fine_mesh,
                                  const State& fine) {
  if (!coarse_mesh.cartesian || !fine_mesh.cartesian) throw MeshNotNested("l2_difference needs Cartesian meshes");
  const auto& cg = *coarse_mesh.cartesian;
  const auto& fg = *fine_mesh.cartesian;
  const auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
  if (!same(cg.lx, fg.lx) || !same(cg.ly, fg.ly)) throw MeshNotNested("meshes cover different domains");
  if (fg.nx < cg.nx || fg.ny < cg.ny || fg.nx % cg.nx != 0 || fg.ny % cg.ny != 0)
    throw MeshNotNested("fine mesh is not an integer refinement of the coarse mesh");
  if (coarse.species() != fine.species() || coarse.cells() != coarse_mesh.num_cells() ||
      fine.cells() != fine_mesh.num_cells())
    throw PreconditionError("l2_difference: state dimensions do not match");

  const std::size_t rx = fg.nx / cg.nx;
  const std::size_t ry = fg.ny / cg.ny;
  std::vector<double> sq(coarse.species(), 0.0);
  for (std::size_t fy = 0; fy < fg.ny; ++fy) {
    for (std::size_t fx = 0; fx < fg.nx; ++fx) {
      const std::size_t f = fy * fg.nx + fx;
      const std::size_t c = (fy / ry) * cg.nx + fx / rx;
      const double area = fine_mesh.cells[f].area;
      for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = coarse(i, c) - fine(i, f);
        sq[i] += area * d * d;
      }
    }
  }
  for (auto& v : sq) v = std::sqrt(v);
  return sq;
}

}  // namespace crossdiff
