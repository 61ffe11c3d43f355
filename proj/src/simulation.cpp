#include "crossdiff/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

double min_entry(const State& s) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : s.values()) m = std::min(m, v);
  return m;
}

void write_text(const std::filesystem::path& path, const std::string& text, std::vector<std::string>& files) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  files.push_back(path.string());
}

using Observer = std::function<void(std::size_t, const State&)>;

Trajectory run_loop(const ModelData& model, const Mesh& mesh, const State& initial, double dt, std::size_t steps,
                    const SolverConfig& solver, bool keep_states, const Observer& observer) {
  Trajectory traj;
  LedgerRow row0;
  row0.h = total_entropy(model, mesh, initial);
  row0.masses = mass_per_species(mesh, initial);
  row0.min_value = min_entry(initial);
  traj.ledger.rows.push_back(row0);
  traj.states.push_back(initial);
  if (observer) observer(0, initial);

  State current = initial;
  for (std::size_t k = 1; k <= steps; ++k) {
    State next;
    StepReport report;
    try {
      std::tie(next, report) = advance(model, mesh, current, dt, solver);
    } catch (const Error& e) {
      traj.exit_code = kExitStepRejected;
      traj.message = fmt::format("step {} rejected: {}", k, e.what());
      break;
    }
    next.time_index = k;

    LedgerRow row;
    row.k = k;
    row.t = static_cast<double>(k) * dt;
    row.h = report.entropy_after;
    row.grad_term = report.dissipation_gradient_term;
    row.pressure_term = report.dissipation_pressure_term;
    row.slack = report.entropy_slack;
    row.tolerance = report.entropy_tolerance;
    row.masses = report.masses;
    row.min_value = report.min_value;
    row.newton_iters = report.newton_iters;
    row.fallback_used = report.fallback_used;
    traj.ledger.rows.push_back(row);

    const bool certified = report.entropy_inequality_satisfied;
    traj.reports.push_back(std::move(report));
    current = std::move(next);
    traj.steps_completed = k;
    if (keep_states) traj.states.push_back(current);
    if (observer) observer(k, current);

    if (!certified) {
      traj.exit_code = kExitEntropyViolated;
      traj.message = fmt::format("step {}: entropy production inequality violated (slack {:.6g}, tolerance {:.3g})",
                                 k, row.slack, row.tolerance);
      break;
    }
  }
  if (!keep_states && traj.steps_completed > 0) traj.states.push_back(current);
  return traj;
}

}  // namespace

Trajectory simulate(const ModelData& model, const Mesh& mesh, const State& initial, double dt, std::size_t steps,
                    const SolverConfig& solver, bool keep_states) {
  return run_loop(model, mesh, initial, dt, steps, solver, keep_states, {});
}

SimulationResult run_simulation(const RunConfig& config, bool write_files) {
  namespace fs = std::filesystem;
  SimulationResult result;
  const fs::path dir(config.output_dir);

  ModelData model;
  Mesh mesh;
  State initial;
  try {
    config.validate();
    model = build_model(config);
    mesh = build_mesh(config);
    initial = initial_state(config, mesh, model);
  } catch (const Error& e) {
    result.exit_code = kExitModelInvalid;
    result.message = e.what();
    if (write_files) {
      fs::create_directories(dir);
      write_text(dir / "error.log", result.message + "\n", result.files);
    }
    return result;
  }

  const std::size_t steps = config.num_steps();
  if (config.step_mismatch())
    result.warnings.push_back(fmt::format("t_final = {} is not a multiple of dt = {}; running {} steps to t = {}",
                                          config.t_final, config.dt, steps, static_cast<double>(steps) * config.dt));

  if (write_files) fs::create_directories(dir);
  const std::size_t cadence = config.field_cadence;
  const auto write_fields = [&](std::size_t k, const State& s) {
    write_text(dir / fmt::format("fields_{:06d}.csv", k), field_csv(mesh, s), result.files);
    if (config.vtk && mesh.cartesian)
      write_text(dir / fmt::format("fields_{:06d}.vtk", k), field_vtk(mesh, s), result.files);
  };
  Observer observer;
  if (write_files) {
    observer = [&](std::size_t k, const State& s) {
      if (k == 0 || (cadence > 0 && k % cadence == 0) || k == steps) write_fields(k, s);
    };
  }

  Trajectory traj = run_loop(model, mesh, initial, config.dt, steps, config.solver, false, observer);
  result.exit_code = traj.exit_code;
  result.message = traj.message;
  result.steps_completed = traj.steps_completed;
  result.final_state = traj.states.back();
  result.ledger = std::move(traj.ledger);

  if (write_files) {
    // Snapshot of the last accepted state when the run stopped early.
    if (result.exit_code != kExitOk && result.steps_completed > 0 && (cadence == 0 || result.steps_completed % cadence != 0))
      write_fields(result.steps_completed, result.final_state);
    write_text(dir / "ledger.csv", ledger_csv(result.ledger, model.n()), result.files);
    if (result.exit_code != kExitOk) write_text(dir / "error.log", result.message + "\n", result.files);
  }
  return result;
}

ConvergenceReport refinement_study(const RunConfig& base, std::size_t levels) {
  if (levels < 2) throw PreconditionError("refinement_study: at least two levels are required");
  if (base.mesh_kind != RunConfig::MeshKind::cartesian)
    throw PreconditionError("refinement_study: the base mesh must be Cartesian");
  base.validate();
  const ModelData model = build_model(base);

  const TestFunction phi = [](double x, double y, double) {
    return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
  };
  // sup over the plane of |grad phi|.
  const double grad_phi_sup = std::numbers::pi;

  ConvergenceReport report;
  std::vector<Mesh> meshes;
  std::vector<State> finals;
  for (std::size_t l = 0; l < levels; ++l) {
    RunConfig cfg = base;
    const std::size_t factor = std::size_t{1} << l;
    cfg.nx = base.nx * factor;
    cfg.ny = base.ny * factor;
    cfg.dt = base.dt / static_cast<double>(factor);

    Mesh mesh = build_mesh(cfg);
    const State initial = initial_state(cfg, mesh, model);
    const std::size_t steps = cfg.num_steps();
    Trajectory traj = simulate(model, mesh, initial, cfg.dt, steps, cfg.solver, true);
    if (traj.exit_code != kExitOk)
      throw CertificateViolation(fmt::format("level {} ({}x{}): {}", l, cfg.nx, cfg.ny, traj.message));
    if (!traj.ledger.certified())
      throw CertificateViolation(fmt::format("level {} ({}x{}): entropy ledger not certified", l, cfg.nx, cfg.ny));

    ConvergenceLevel level;
    level.nx = cfg.nx;
    level.ny = cfg.ny;
    level.h = mesh.size;
    level.dt = cfg.dt;
    level.steps = steps;
    level.weak_bv_ratio = weak_bv_functional(mesh, traj.states, cfg.dt, phi) / grad_phi_sup;
    report.levels.push_back(level);
    finals.push_back(traj.states.back());
    meshes.push_back(std::move(mesh));
  }

  for (std::size_t l = 0; l + 1 < levels; ++l) {
    ConvergenceRow row;
    row.level = l;
    row.l2_diff = l2_difference(meshes[l], finals[l], meshes[l + 1], finals[l + 1]);
    row.order.assign(row.l2_diff.size(), std::numeric_limits<double>::quiet_NaN());
    if (l > 0) {
      const auto& prev = report.rows.back().l2_diff;
      for (std::size_t i = 0; i < row.l2_diff.size(); ++i) row.order[i] = std::log2(prev[i] / row.l2_diff[i]);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

ConvergenceReport run_convergence(const RunConfig& config, std::size_t levels, bool write_files) {
  ConvergenceReport report = refinement_study(config, levels);
  if (write_files) {
    std::filesystem::create_directories(config.output_dir);
    std::vector<std::string> files;
    write_text(std::filesystem::path(config.output_dir) / "convergence.csv", convergence_csv(report), files);
  }
  return report;
}

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

std::string ledger_csv(const EntropyLedger& ledger, std::size_t species) {
  std::string out = "k,t,H,grad_term,pressure_term,slack,min_value,newton_iters,fallback";
  for (std::size_t i = 1; i <= species; ++i) out += fmt::format(",mass_{}", i);
  out += '\n';
  for (const auto& r : ledger.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}", r.k, num(r.t), num(r.h), num(r.grad_term), num(r.pressure_term),
                       num(r.slack), num(r.min_value), r.newton_iters, r.fallback_used ? 1 : 0);
    for (double m : r.masses) out += ',' + num(m);
    out += '\n';
  }
  return out;
}

std::string field_csv(const Mesh& mesh, const State& state) {
  std::string out = "cell_id,x,y";
  for (std::size_t i = 1; i <= state.species(); ++i) out += fmt::format(",u_{}", i);
  out += '\n';
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const auto& c = mesh.cells[k];
    out += fmt::format("{},{},{}", k, num(c.center.x), num(c.center.y));
    for (std::size_t i = 0; i < state.species(); ++i) out += ',' + num(state(i, k));
    out += '\n';
  }
  return out;
}

std::string field_vtk(const Mesh& mesh, const State& state) {
  if (!mesh.cartesian) throw PreconditionError("VTK output needs a Cartesian mesh");
  const auto& g = *mesh.cartesian;
  std::string out = "# vtk DataFile Version 3.0\ncrossdiff cell fields\nASCII\nDATASET RECTILINEAR_GRID\n";
  out += fmt::format("DIMENSIONS {} {} 1\n", g.nx + 1, g.ny + 1);
  out += fmt::format("X_COORDINATES {} double\n", g.nx + 1);
  for (std::size_t i = 0; i <= g.nx; ++i)
    out += num(g.lx * static_cast<double>(i) / static_cast<double>(g.nx)) + (i == g.nx ? "\n" : " ");
  out += fmt::format("Y_COORDINATES {} double\n", g.ny + 1);
  for (std::size_t j = 0; j <= g.ny; ++j)
    out += num(g.ly * static_cast<double>(j) / static_cast<double>(g.ny)) + (j == g.ny ? "\n" : " ");
  out += "Z_COORDINATES 1 double\n0\n";
  out += fmt::format("CELL_DATA {}\n", mesh.num_cells());
  for (std::size_t i = 0; i < state.species(); ++i) {
    out += fmt::format("SCALARS u_{} double 1\nLOOKUP_TABLE default\n", i + 1);
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) out += num(state(i, k)) + '\n';
  }
  return out;
}

std::string convergence_csv(const ConvergenceReport& report) {
  const std::size_t n = report.rows.empty() ? 0 : report.rows.front().l2_diff.size();
  std::string out = "level,nx_coarse,ny_coarse,nx_fine,ny_fine,h_coarse,h_fine,dt_coarse,dt_fine,weak_bv_ratio_coarse,weak_bv_ratio_fine";
  for (std::size_t i = 1; i <= n; ++i) out += fmt::format(",l2_diff_{}", i);
  for (std::size_t i = 1; i <= n; ++i) out += fmt::format(",order_{}", i);
  out += '\n';
  for (const auto& row : report.rows) {
    const auto& c = report.levels.at(row.level);
    const auto& f = report.levels.at(row.level + 1);
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}", row.level, c.nx, c.ny, f.nx, f.ny, num(c.h), num(f.h),
                       num(c.dt), num(f.dt), num(c.weak_bv_ratio), num(f.weak_bv_ratio));
    for (double d : row.l2_diff) out += ',' + num(d);
    for (double o : row.order) out += ',' + num(o);
    out += '\n';
  }
  return out;
}

}  // namespace crossdiff
