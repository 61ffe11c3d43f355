// Command-line driver: simulate, converge, check-mesh.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "crossdiff/config.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/mesh.hpp"
#include "crossdiff/simulation.hpp"

using namespace crossdiff;

namespace {

int cmd_simulate(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig config;
  try {
    config = parse_config_file(path, overrides);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  const SimulationResult result = run_simulation(config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  if (result.exit_code != kExitOk) {
    std::cerr << "error: " << result.message << '\n';
  }
  std::cout << fmt::format("{} of {} steps completed; output in {}\n", result.steps_completed, config.num_steps(),
                           config.output_dir);
  if (!result.ledger.rows.empty()) {
    const auto& first = result.ledger.rows.front();
    const auto& last = result.ledger.rows.back();
    std::cout << fmt::format("entropy {:.10g} -> {:.10g}\n", first.h, last.h);
  }
  return result.exit_code;
}

int cmd_converge(const std::string& path, std::size_t levels, const std::vector<std::string>& overrides) {
  if (levels < 2) {
    std::cerr << "usage error: --levels must be at least 2\n";
    return kExitUsage;
  }
  RunConfig config;
  try {
    config = parse_config_file(path, overrides);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    const ConvergenceReport report = run_convergence(config, levels);
    for (const auto& lvl : report.levels)
      std::cout << fmt::format("{:>4}x{:<4} h={:.4g} dt={:.4g} steps={} weak-BV ratio={:.6g}\n", lvl.nx, lvl.ny,
                               lvl.h, lvl.dt, lvl.steps, lvl.weak_bv_ratio);
    for (const auto& row : report.rows) {
      std::cout << fmt::format("level {} -> {}:", row.level, row.level + 1);
      for (std::size_t i = 0; i < row.l2_diff.size(); ++i) {
        std::cout << fmt::format(" |u_{}| diff={:.6e}", i + 1, row.l2_diff[i]);
        if (!std::isnan(row.order[i])) std::cout << fmt::format(" order={:.3f}", row.order[i]);
      }
      std::cout << '\n';
    }
    std::cout << "report written to " << config.output_dir << "/convergence.csv\n";
  } catch (const DetailedBalanceViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitModelInvalid;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitModelInvalid;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStepRejected;
  }
  return kExitOk;
}

int cmd_check_mesh(const std::string& path) {
  Mesh mesh;
  try {
    mesh = load_mesh_file(path);
  } catch (const Error& e) {
    std::cerr << "invalid mesh: " << e.what() << '\n';
    return kExitModelInvalid;
  }
  const auto report = validate_mesh(mesh);
  std::cout << fmt::format("cells {}\nedges {} ({} interior)\ntotal area {:.17g}\nsize {:.17g}\nxi {:.17g}\n",
                           mesh.num_cells(), mesh.num_edges(), mesh.num_interior_edges(), mesh.total_area, mesh.size,
                           mesh.xi);
  std::cout << report.to_string() << '\n';
  return report.ok() ? kExitOk : kExitModelInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume solver for n-species cross-diffusion population systems"};
  app.require_subcommand(1);

  std::vector<std::string> overrides;
  std::string config_path;
  std::string mesh_path;
  std::size_t levels = 0;

  auto* simulate = app.add_subcommand("simulate", "Run the time loop and write the entropy ledger and cell fields");
  simulate->add_option("config", config_path, "Run configuration")->required();
  simulate->add_option("--override", overrides, "section.key=value applied over the config (repeatable)");

  auto* converge = app.add_subcommand("converge", "Self-convergence study on nested Cartesian meshes");
  converge->add_option("config", config_path, "Run configuration")->required();
  converge->add_option("--levels", levels, "Number of refinement levels (>= 2)")->required();
  converge->add_option("--override", overrides, "section.key=value applied over the config (repeatable)");

  auto* check = app.add_subcommand("check-mesh", "Load and validate a MESH2D file");
  check->add_option("file", mesh_path, "Mesh file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*simulate) return cmd_simulate(config_path, overrides);
  if (*converge) return cmd_converge(config_path, levels, overrides);
  return cmd_check_mesh(mesh_path);
}
