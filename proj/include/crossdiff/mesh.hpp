#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crossdiff {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Cell {
  std::size_t id = 0;
  Point center;
  double area = 0.0;
};

enum class EdgeKind { interior, exterior };

inline constexpr std::ptrdiff_t kNoCell = -1;

/// An edge sigma of the mesh. For interior edges `neighbor` is the second
/// cell L of sigma = K|L; for exterior edges it is kNoCell.
///
/// `distance` is d_sigma: d(x_K, x_L) for interior edges and d(x_K, sigma)
/// for exterior ones. `owner_distance` / `neighbor_distance` are the
/// center-to-edge distances d(x_K, sigma) and d(x_L, sigma) used by the
/// regularity constant.
struct Edge {
  std::size_t id = 0;
  EdgeKind kind = EdgeKind::exterior;
  std::size_t owner = 0;
  std::ptrdiff_t neighbor = kNoCell;
  double length = 0.0;
  double distance = 0.0;
  double transmissibility = 0.0;
  double owner_distance = 0.0;
  double neighbor_distance = 0.0;

  bool is_interior() const { return kind == EdgeKind::interior; }

  /// The cell across sigma as seen from `cell`; `cell` itself on exterior edges.
  std::size_t other(std::size_t cell) const {
    if (!is_interior()) return cell;
    return cell == owner ? static_cast<std::size_t>(neighbor) : owner;
  }

  /// d(x_cell, sigma).
  double center_to_edge(std::size_t cell) const {
    return (is_interior() && cell != owner) ? neighbor_distance : owner_distance;
  }
};

/// Present for meshes produced by build_cartesian; cells are row-major,
/// id = iy * nx + ix.
struct CartesianInfo {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double lx = 0.0;
  double ly = 0.0;

  bool operator==(const CartesianInfo&) const = default;
};

/// Admissible finite-volume mesh of a polygonal domain.
///
/// Fields are public so that tests can inject faults; after construction a
/// Mesh is treated as immutable.
struct Mesh {
  std::vector<Cell> cells;
  std::vector<Edge> edges;
  /// Edge ids bounding each cell, interior ones first, in increasing id order.
  std::vector<std::vector<std::size_t>> cell_edges;
  std::vector<std::size_t> interior_edge_count;
  /// Per-cell diameter used for the mesh size.
  std::vector<double> diameters;
  double size = 0.0;
  double xi = 0.0;
  double total_area = 0.0;
  std::optional<CartesianInfo> cartesian;

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_edges() const { return edges.size(); }
  std::size_t num_interior_edges() const;
};

Mesh build_cartesian(std::size_t nx, std::size_t ny, double lx, double ly);

/// Parses the MESH2D text format, recomputes transmissibilities and derived
/// quantities and validates the result.
///
/// Interior edges are assumed to sit at the midpoint of x_K x_L (exact for
/// Cartesian and Voronoi meshes), so d(x_K, sigma) = d(x_L, sigma) = d_sigma/2.
Mesh load_mesh(std::string_view text);
Mesh load_mesh_file(const std::string& path);

/// Writes `mesh` in the MESH2D text format with 17 significant digits.
std::string write_mesh(const Mesh& mesh);

/// xi = min over K, sigma in E_K of d(x_K, sigma) / d_sigma.
double regularity_xi(const Mesh& mesh);

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  /// "ok" or the violations joined by newlines.
  std::string to_string() const;
};

ValidationReport validate_mesh(const Mesh& mesh);

}  // namespace crossdiff
