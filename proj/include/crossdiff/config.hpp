#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossdiff/mesh.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/solver.hpp"
#include "crossdiff/state.hpp"

namespace crossdiff {

/// Initial profile of one species.
struct InitProfile {
  enum class Kind { constant, gaussian, checkerboard };
  Kind kind = Kind::constant;
  /// constant: {c}; gaussian: {cx, cy, sigma, amplitude}; checkerboard: {hi, lo}.
  std::vector<double> params{0.0};

  static InitProfile constant(double c) { return {Kind::constant, {c}}; }
  static InitProfile gaussian(double cx, double cy, double sigma, double amplitude) {
    return {Kind::gaussian, {cx, cy, sigma, amplitude}};
  }
  static InitProfile checkerboard(double hi, double lo) { return {Kind::checkerboard, {hi, lo}}; }

  /// Profile value at a point; checkerboard is cell-based and not defined here.
  double value_at(double x, double y) const;

  bool operator==(const InitProfile&) const = default;
};

struct RunConfig {
  // model
  std::size_t n = 0;
  double delta = 0.0;
  std::vector<std::vector<double>> a;
  std::optional<std::vector<double>> pi;

  // mesh
  enum class MeshKind { cartesian, file };
  MeshKind mesh_kind = MeshKind::cartesian;
  std::size_t nx = 0;
  std::size_t ny = 0;
  double lx = 1.0;
  double ly = 1.0;
  std::string mesh_file;

  // time
  double t_final = 0.0;
  double dt = 0.0;

  std::vector<InitProfile> init;
  SolverConfig solver;

  // output
  std::string output_dir = "output";
  /// Cell fields are written every `field_cadence` steps; 0 writes only the
  /// initial and final states.
  std::size_t field_cadence = 0;
  bool vtk = false;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  /// N_T = round(t_final / dt).
  std::size_t num_steps() const;
  /// True when t_final is not an integer multiple of dt (to 1e-9 relative).
  bool step_mismatch() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the `section.key = value` format. `overrides` are
/// `section.key=value` strings applied on top of the file contents.
/// Unknown keys, duplicates and malformed values raise ParseError; invalid
/// combinations raise ConfigError.
RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
RunConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides = {});

/// Inverse of parse_config; numbers use 17 significant digits.
std::string emit_config(const RunConfig& config);

InteractionMatrix interaction_matrix(const RunConfig& config);
ModelData build_model(const RunConfig& config);
Mesh build_mesh(const RunConfig& config);

/// Cell means of the initial profiles: exact for constants and checkerboards,
/// midpoint rule (value at the cell center) for gaussians.
State initial_state(const RunConfig& config, const Mesh& mesh, const ModelData& model);

}  // namespace crossdiff
