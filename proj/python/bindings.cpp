// Python bindings. Densities cross the boundary as (n_species, n_cells) arrays.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crossdiff/config.hpp"
#include "crossdiff/diagnostics.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/mesh.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/scheme.hpp"
#include "crossdiff/simulation.hpp"
#include "crossdiff/solver.hpp"

namespace py = pybind11;
using namespace crossdiff;

namespace {

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;

State to_state(const Array2& arr) {
  if (arr.ndim() != 2) throw PreconditionError("expected a (species, cells) array");
  const auto n = static_cast<std::size_t>(arr.shape(0));
  const auto cells = static_cast<std::size_t>(arr.shape(1));
  State s(n, cells);
  auto r = arr.unchecked<2>();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < cells; ++k) s(i, k) = r(i, k);
  return s;
}

Array2 to_array(const State& s) {
  Array2 out({s.species(), s.cells()});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.species(); ++i)
    for (std::size_t k = 0; k < s.cells(); ++k) w(i, k) = s(i, k);
  return out;
}

py::dict step_report_dict(const StepReport& r) {
  py::dict d;
  d["newton_iters"] = r.newton_iters;
  d["fallback_used"] = r.fallback_used;
  d["residual_norm"] = r.residual_norm;
  d["entropy_before"] = r.entropy_before;
  d["entropy_after"] = r.entropy_after;
  d["dissipation_gradient_term"] = r.dissipation_gradient_term;
  d["dissipation_pressure_term"] = r.dissipation_pressure_term;
  d["entropy_slack"] = r.entropy_slack;
  d["entropy_tolerance"] = r.entropy_tolerance;
  d["entropy_inequality_satisfied"] = r.entropy_inequality_satisfied;
  d["min_value"] = r.min_value;
  d["masses"] = r.masses;
  d["max_mass_drift"] = r.max_mass_drift;
  py::list rungs;
  for (const auto& g : r.eps_path) {
    py::dict rd;
    rd["eps"] = g.eps;
    rd["iterations"] = g.iterations;
    rd["converged"] = g.converged;
    rd["newton_finish"] = g.newton_finish;
    rd["residual_norm"] = g.residual_norm;
    rd["energy"] = g.energy;
    rd["energy_bound"] = g.energy_bound;
    rungs.append(rd);
  }
  d["eps_path"] = rungs;
  return d;
}

py::list ledger_list(const EntropyLedger& ledger) {
  py::list rows;
  for (const auto& row : ledger.rows) {
    py::dict d;
    d["k"] = row.k;
    d["t"] = row.t;
    d["H"] = row.h;
    d["grad_term"] = row.grad_term;
    d["pressure_term"] = row.pressure_term;
    d["slack"] = row.slack;
    d["tolerance"] = row.tolerance;
    d["masses"] = row.masses;
    d["min_value"] = row.min_value;
    d["newton_iters"] = row.newton_iters;
    d["fallback"] = row.fallback_used;
    rows.append(d);
  }
  return rows;
}

SolverConfig solver_from_kwargs(const py::kwargs& kw) {
  SolverConfig cfg;
  for (const auto& item : kw) {
    const auto key = item.first.cast<std::string>();
    const py::handle v = item.second;
    if (key == "newton_tol") cfg.newton_tol = v.cast<double>();
    else if (key == "max_newton_iters") cfg.max_newton_iters = v.cast<int>();
    else if (key == "line_search_shrink") cfg.line_search_shrink = v.cast<double>();
    else if (key == "max_line_search") cfg.max_line_search = v.cast<int>();
    else if (key == "eps_ladder") cfg.eps_ladder = v.cast<std::vector<double>>();
    else if (key == "fixed_point_damping") cfg.fixed_point_damping = v.cast<double>();
    else if (key == "max_fp_iters") cfg.max_fp_iters = v.cast<int>();
    else if (key == "tol_neg") cfg.tol_neg = v.cast<double>();
    else if (key == "entropy_slack_factor") cfg.entropy_slack_factor = v.cast<double>();
    else throw py::type_error("unknown solver option '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_crossdiff, m) {
  m.doc() = "Finite-volume solver for n-species cross-diffusion population systems";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<MeshValidationError>(m, "MeshValidationError", base.ptr());
  py::register_exception<MeshNotNested>(m, "MeshNotNested", base.ptr());
  py::register_exception<DetailedBalanceViolation>(m, "DetailedBalanceViolation", base.ptr());
  py::register_exception<NotSymmetric>(m, "NotSymmetric", base.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<Singular>(m, "Singular", base.ptr());
  py::register_exception<NoConvergence>(m, "NoConvergence", base.ptr());
  py::register_exception<CertificateViolation>(m, "CertificateViolation", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("num_cells", &Mesh::num_cells)
      .def_property_readonly("num_edges", &Mesh::num_edges)
      .def_property_readonly("num_interior_edges", &Mesh::num_interior_edges)
      .def_readonly("total_area", &Mesh::total_area)
      .def_readonly("size", &Mesh::size)
      .def_readonly("xi", &Mesh::xi)
      .def_property_readonly("areas",
                             [](const Mesh& mesh) {
                               Eigen::VectorXd a(static_cast<Eigen::Index>(mesh.num_cells()));
                               for (std::size_t k = 0; k < mesh.num_cells(); ++k) a(k) = mesh.cells[k].area;
                               return a;
                             })
      .def_property_readonly("centers", [](const Mesh& mesh) {
        Eigen::MatrixXd c(static_cast<Eigen::Index>(mesh.num_cells()), 2);
        for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
          c(k, 0) = mesh.cells[k].center.x;
          c(k, 1) = mesh.cells[k].center.y;
        }
        return c;
      });

  m.def("build_cartesian", &build_cartesian, py::arg("nx"), py::arg("ny"), py::arg("lx") = 1.0,
        py::arg("ly") = 1.0);
  m.def("load_mesh", [](const std::string& text) { return load_mesh(text); }, py::arg("text"));
  m.def("load_mesh_file", &load_mesh_file, py::arg("path"));
  m.def("write_mesh", &write_mesh, py::arg("mesh"));
  m.def("validate_mesh", [](const Mesh& mesh) { return validate_mesh(mesh).to_string(); }, py::arg("mesh"));

  py::class_<ModelData>(m, "Model")
      .def_property_readonly("n", &ModelData::n)
      .def_property_readonly("delta", &ModelData::delta)
      .def_property_readonly("a", &ModelData::a)
      .def_readonly("pi", &ModelData::pi)
      .def_readonly("lam", &ModelData::lambda)
      .def_readonly("sym", &ModelData::sym)
      .def_property_readonly("coercivity_constant", &ModelData::coercivity_constant)
      .def("pressure", [](const ModelData& md, const Eigen::VectorXd& u) { return pressure(md, u); })
      .def("entropy_density", [](const ModelData& md, const Eigen::VectorXd& u) { return entropy_density(md, u); })
      .def("to_entropy", [](const ModelData& md, const Eigen::VectorXd& u) { return primal_to_entropy(md, u); })
      .def("to_primal", [](const ModelData& md, const Eigen::VectorXd& w) { return entropy_to_primal(md, w); });

  m.def(
      "build_model",
      [](const Eigen::MatrixXd& a, double delta, std::optional<Eigen::VectorXd> pi) {
        return build_model(InteractionMatrix{a, delta}, pi);
      },
      py::arg("a"), py::arg("delta"), py::arg("pi") = py::none());
  m.def("detailed_balance_weights", &detailed_balance_weights, py::arg("a"));
  m.def("smallest_eigenvalue_sym", &smallest_eigenvalue_sym, py::arg("m"));

  m.def(
      "total_entropy", [](const ModelData& md, const Mesh& mesh, const Array2& u) {
        return total_entropy(md, mesh, to_state(u));
      },
      py::arg("model"), py::arg("mesh"), py::arg("u"));
  m.def(
      "mass_per_species", [](const Mesh& mesh, const Array2& u) { return mass_per_species(mesh, to_state(u)); },
      py::arg("mesh"), py::arg("u"));
  m.def(
      "residual",
      [](const ModelData& md, const Mesh& mesh, const Array2& prev, const Array2& cand, double dt) {
        const Residual r = residual(md, mesh, to_state(prev), to_state(cand), dt);
        return py::make_tuple(to_array(r.values), r.norm);
      },
      py::arg("model"), py::arg("mesh"), py::arg("prev"), py::arg("cand"), py::arg("dt"));
  m.def(
      "jacobian",
      [](const ModelData& md, const Mesh& mesh, const Array2& prev, const Array2& cand, double dt) {
        return Eigen::MatrixXd(jacobian(md, mesh, to_state(prev), to_state(cand), dt).matrix());
      },
      py::arg("model"), py::arg("mesh"), py::arg("prev"), py::arg("cand"), py::arg("dt"));
  m.def(
      "advance",
      [](const ModelData& md, const Mesh& mesh, const Array2& prev, double dt, const py::kwargs& kw) {
        const auto [next, rep] = advance(md, mesh, to_state(prev), dt, solver_from_kwargs(kw));
        return py::make_tuple(to_array(next), step_report_dict(rep));
      },
      py::arg("model"), py::arg("mesh"), py::arg("prev"), py::arg("dt"));
  m.def(
      "epsilon_continuation_solve",
      [](const ModelData& md, const Mesh& mesh, const Array2& prev, double dt, const py::kwargs& kw) {
        const auto [next, rep] = epsilon_continuation_solve(md, mesh, to_state(prev), dt, solver_from_kwargs(kw));
        return py::make_tuple(to_array(next), step_report_dict(rep));
      },
      py::arg("model"), py::arg("mesh"), py::arg("prev"), py::arg("dt"));
  m.def(
      "simulate",
      [](const ModelData& md, const Mesh& mesh, const Array2& initial, double dt, std::size_t steps,
         const py::kwargs& kw) {
        const Trajectory t = simulate(md, mesh, to_state(initial), dt, steps, solver_from_kwargs(kw), true);
        py::list states;
        for (const auto& s : t.states) states.append(to_array(s));
        py::dict d;
        d["exit_code"] = t.exit_code;
        d["message"] = t.message;
        d["steps_completed"] = t.steps_completed;
        d["states"] = states;
        d["ledger"] = ledger_list(t.ledger);
        d["certified"] = t.ledger.certified();
        return d;
      },
      py::arg("model"), py::arg("mesh"), py::arg("initial"), py::arg("dt"), py::arg("steps"));

  m.def(
      "run_simulation",
      [](const std::string& text, const std::vector<std::string>& overrides, bool write_files) {
        const SimulationResult r = run_simulation(parse_config(text, overrides), write_files);
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["message"] = r.message;
        d["warnings"] = r.warnings;
        d["steps_completed"] = r.steps_completed;
        d["final_state"] = r.final_state.size() ? py::object(to_array(r.final_state)) : py::none();
        d["ledger"] = ledger_list(r.ledger);
        d["certified"] = r.ledger.certified();
        d["files"] = r.files;
        return d;
      },
      py::arg("config_text"), py::arg("overrides") = std::vector<std::string>{}, py::arg("write_files") = false,
      "Parse a config text and run it; returns exit code, ledger rows and the final state.");
  m.def(
      "run_convergence",
      [](const std::string& text, std::size_t levels, const std::vector<std::string>& overrides, bool write_files) {
        const ConvergenceReport r = run_convergence(parse_config(text, overrides), levels, write_files);
        py::list lv, rows;
        for (const auto& l : r.levels) {
          py::dict d;
          d["nx"] = l.nx;
          d["ny"] = l.ny;
          d["h"] = l.h;
          d["dt"] = l.dt;
          d["steps"] = l.steps;
          d["weak_bv_ratio"] = l.weak_bv_ratio;
          lv.append(d);
        }
        for (const auto& row : r.rows) {
          py::dict d;
          d["level"] = row.level;
          d["l2_diff"] = row.l2_diff;
          d["order"] = row.order;
          rows.append(d);
        }
        py::dict out;
        out["levels"] = lv;
        out["rows"] = rows;
        return out;
      },
      py::arg("config_text"), py::arg("levels"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("write_files") = false);
  m.def(
      "emit_config", [](const std::string& text) { return emit_config(parse_config(text)); }, py::arg("config_text"),
      "Normalized form of a config text.");
}
