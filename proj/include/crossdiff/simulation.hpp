#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "crossdiff/config.hpp"
#include "crossdiff/diagnostics.hpp"
#include "crossdiff/mesh.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/solver.hpp"
#include "crossdiff/state.hpp"

namespace crossdiff {

/// Exit codes shared by run_simulation, run_convergence and the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitStepRejected = 1,
  kExitModelInvalid = 2,
  kExitEntropyViolated = 3,
  kExitUsage = 64,
};

struct Trajectory {
  EntropyLedger ledger;
  /// Every state from k = 0, or only the first and last when not kept.
  std::vector<State> states;
  std::vector<StepReport> reports;
  std::size_t steps_completed = 0;
  int exit_code = kExitOk;
  std::string message;
};

/// Time loop over advance(). Stops at the first rejected step or entropy
/// certificate failure and records why in exit_code / message.
Trajectory simulate(const ModelData& model, const Mesh& mesh, const State& initial, double dt, std::size_t steps,
                    const SolverConfig& solver, bool keep_states = false);

struct SimulationResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::string> warnings;
  std::size_t steps_completed = 0;
  State final_state;
  EntropyLedger ledger;
  std::vector<std::string> files;
};

/// Builds model, mesh and initial data from `config`, runs num_steps()
/// steps and, when `write_files` is set, writes ledger.csv, field snapshots
/// (and VTK when enabled) into config.output_dir. On a model-build failure
/// only error.log is written.
SimulationResult run_simulation(const RunConfig& config, bool write_files = true);

/// refinement_study plus convergence.csv in config.output_dir when `write_files`.
ConvergenceReport run_convergence(const RunConfig& config, std::size_t levels, bool write_files = true);

/// `k,t,H,grad_term,pressure_term,slack,min_value,newton_iters,fallback,mass_1,...,mass_n`
std::string ledger_csv(const EntropyLedger& ledger, std::size_t species);
/// `cell_id,x,y,u_1,...,u_n`
std::string field_csv(const Mesh& mesh, const State& state);
/// Legacy ASCII VTK rectilinear grid with one cell scalar per species.
std::string field_vtk(const Mesh& mesh, const State& state);
std::string convergence_csv(const ConvergenceReport& report);

}  // namespace crossdiff
