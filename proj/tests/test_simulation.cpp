#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "crossdiff/config.hpp"
#include "crossdiff/diagnostics.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/simulation.hpp"
#include "support/oracles.hpp"

using namespace crossdiff;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(CROSSDIFF_TEST_TMP) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig base_config(const std::string& extra = "") {
  return parse_config(std::string(R"(model.n = 2
model.delta = 0.5
model.a.1 = 1.0 0.5
model.a.2 = 1.0 2.0
mesh.type = cartesian
mesh.nx = 6
mesh.ny = 5
time.t_final = 0.05
time.dt = 0.005
init.1 = gaussian 0.4 0.5 0.2 1.0
init.2 = gaussian 0.6 0.5 0.2 1.0
)") + extra);
}

}  // namespace

TEST(RunSimulation, ConstantInitIsStationary) {
  RunConfig c = base_config();
  c.init = {InitProfile::constant(0.7), InitProfile::constant(0.2)};
  c.output_dir = scratch("constant").string();
  c.field_cadence = 1;
  const SimulationResult r = run_simulation(c);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  EXPECT_EQ(r.steps_completed, 10u);
  ASSERT_EQ(r.ledger.rows.size(), 11u);
  for (const auto& row : r.ledger.rows) {
    EXPECT_EQ(row.grad_term, 0.0);
    EXPECT_EQ(row.pressure_term, 0.0);
  }
  const fs::path dir(c.output_dir);
  const std::string first = slurp(dir / "fields_000000.csv");
  for (int k = 1; k <= 10; ++k) EXPECT_EQ(slurp(dir / fmt::format("fields_{:06d}.csv", k)), first);
}

TEST(RunSimulation, TwoCellOracleConfig) {
  RunConfig c = parse_config_file(std::string(CROSSDIFF_SOURCE_DIR) + "/data/two_cell_oracle.cfg");
  c.output_dir = scratch("two_cell").string();
  const SimulationResult r = run_simulation(c);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const auto o = oracle::TwoCellProblem::solve();
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.final_state.values()[k], o[k], 1e-8);
}

TEST(RunSimulation, DetailedBalanceViolationWritesOnlyErrorLog) {
  RunConfig c = parse_config_file(std::string(CROSSDIFF_SOURCE_DIR) + "/data/db_violation.cfg");
  const fs::path dir = scratch("db_violation");
  c.output_dir = dir.string();
  const SimulationResult r = run_simulation(c);
  EXPECT_EQ(r.exit_code, kExitModelInvalid);
  EXPECT_EQ(r.steps_completed, 0u);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) names.push_back(entry.path().filename().string());
  EXPECT_EQ(names, std::vector<std::string>{"error.log"});
  EXPECT_NE(slurp(dir / "error.log").find("detailed balance"), std::string::npos);
}

TEST(RunSimulation, IndefiniteModelIsRejected) {
  RunConfig c = base_config();
  c.a = {{1.0, 2.0}, {3.0, 4.0}};
  c.output_dir = scratch("indefinite").string();
  EXPECT_EQ(run_simulation(c).exit_code, kExitModelInvalid);
}

TEST(RunSimulation, OutputIsByteStable) {
  RunConfig c = base_config("output.cadence = 3\noutput.vtk = true\n");
  c.output_dir = scratch("stable_a").string();
  const SimulationResult a = run_simulation(c);
  c.output_dir = scratch("stable_b").string();
  const SimulationResult b = run_simulation(c);
  ASSERT_EQ(a.exit_code, kExitOk);
  ASSERT_EQ(a.files.size(), b.files.size());
  // initial, k = 3, 6, 9, final: csv + vtk each, plus the ledger.
  EXPECT_EQ(a.files.size(), 11u);
  for (std::size_t f = 0; f < a.files.size(); ++f) {
    EXPECT_EQ(fs::path(a.files[f]).filename(), fs::path(b.files[f]).filename());
    EXPECT_EQ(slurp(a.files[f]), slurp(b.files[f])) << a.files[f];
  }
}

TEST(RunSimulation, LedgerAndFieldFormats) {
  RunConfig c = base_config();
  c.output_dir = scratch("formats").string();
  const SimulationResult r = run_simulation(c);
  ASSERT_EQ(r.exit_code, kExitOk);
  const std::string ledger = slurp(fs::path(c.output_dir) / "ledger.csv");
  EXPECT_EQ(ledger.substr(0, ledger.find('\n')),
            "k,t,H,grad_term,pressure_term,slack,min_value,newton_iters,fallback,mass_1,mass_2");
  EXPECT_EQ(std::count(ledger.begin(), ledger.end(), '\n'), 12);
  const std::string field = slurp(fs::path(c.output_dir) / "fields_000010.csv");
  EXPECT_EQ(field.substr(0, field.find('\n')), "cell_id,x,y,u_1,u_2");
  EXPECT_EQ(std::count(field.begin(), field.end(), '\n'), 31);
  EXPECT_TRUE(r.ledger.certified());
}

TEST(RunSimulation, VtkHeader) {
  const Mesh mesh = build_cartesian(3, 2, 1.0, 1.0);
  const std::string vtk = field_vtk(mesh, State(2, 6, 1.0));
  EXPECT_EQ(vtk.rfind("# vtk DataFile Version 3.0", 0), 0u);
  EXPECT_NE(vtk.find("DATASET RECTILINEAR_GRID"), std::string::npos);
  EXPECT_NE(vtk.find("DIMENSIONS 4 3 1"), std::string::npos);
  EXPECT_NE(vtk.find("CELL_DATA 6"), std::string::npos);
}

TEST(RunSimulation, StepMismatchWarns) {
  RunConfig c = base_config();
  c.t_final = 0.0512;
  const SimulationResult r = run_simulation(c, false);
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_EQ(r.steps_completed, 10u);
  ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(RunSimulation, LoadedMeshMatchesCartesianRun) {
  const fs::path dir = scratch("file_mesh");
  fs::create_directories(dir);
  RunConfig c = base_config();
  {
    std::ofstream out(dir / "grid.mesh");
    out << write_mesh(build_mesh(c));
  }
  const SimulationResult cart = run_simulation(c, false);
  RunConfig f = c;
  f.mesh_kind = RunConfig::MeshKind::file;
  f.mesh_file = (dir / "grid.mesh").string();
  const SimulationResult loaded = run_simulation(f, false);
  ASSERT_EQ(loaded.exit_code, kExitOk) << loaded.message;
  EXPECT_LT((cart.final_state.flat() - loaded.final_state.flat()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulate, WeakBVWithConstantTestFunctionIsMassDrift) {
  const RunConfig c = base_config();
  const ModelData model = build_model(c);
  const Mesh mesh = build_mesh(c);
  const Trajectory t =
      simulate(model, mesh, initial_state(c, mesh, model), c.dt, c.num_steps(), c.solver, true);
  ASSERT_EQ(t.exit_code, kExitOk);
  ASSERT_EQ(t.states.size(), 11u);
  EXPECT_LE(weak_bv_functional(mesh, t.states, c.dt, [](double, double, double) { return 1.0; }), 1e-10);
  EXPECT_GT(weak_bv_functional(mesh, t.states, c.dt, [](double x, double, double) { return x; }), 0.0);
}

TEST(Convergence, ConstantDataHasZeroDifferences) {
  RunConfig c = base_config();
  c.nx = c.ny = 4;
  c.init = {InitProfile::constant(0.5), InitProfile::constant(1.5)};
  c.output_dir = scratch("converge_constant").string();
  const ConvergenceReport r = run_convergence(c, 2);
  ASSERT_EQ(r.levels.size(), 2u);
  ASSERT_EQ(r.rows.size(), 1u);
  for (double d : r.rows[0].l2_diff) EXPECT_LT(d, 1e-13);
  EXPECT_EQ(r.levels[1].nx, 8u);
  EXPECT_EQ(r.levels[1].dt, c.dt / 2.0);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "convergence.csv"));
}

TEST(Convergence, GaussianDifferencesDecrease) {
  RunConfig c = base_config();
  c.nx = c.ny = 4;
  c.dt = 0.0125;
  const ConvergenceReport r = run_convergence(c, 3, false);
  ASSERT_EQ(r.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LT(r.rows[1].l2_diff[i], r.rows[0].l2_diff[i]);
    EXPECT_FALSE(std::isnan(r.rows[1].order[i]));
  }
  EXPECT_TRUE(std::isnan(r.rows[0].order[0]));
}

TEST(Convergence, RejectsSingleLevel) { EXPECT_THROW(run_convergence(base_config(), 1, false), PreconditionError); }
