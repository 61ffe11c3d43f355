#include "crossdiff/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

// Recomputes every derived quantity from cells and the raw edge data.
void finalize(Mesh& mesh) {
  const std::size_t ncells = mesh.cells.size();
  mesh.cell_edges.assign(ncells, {});
  mesh.interior_edge_count.assign(ncells, 0);
  mesh.diameters.assign(ncells, 0.0);

  for (auto& e : mesh.edges) {
    e.transmissibility = e.length / e.distance;
    mesh.cell_edges[e.owner].push_back(e.id);
    if (e.is_interior()) mesh.cell_edges[static_cast<std::size_t>(e.neighbor)].push_back(e.id);
  }
  for (std::size_t k = 0; k < ncells; ++k) {
    auto& list = mesh.cell_edges[k];
    std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      const bool ia = mesh.edges[a].is_interior();
      const bool ib = mesh.edges[b].is_interior();
      if (ia != ib) return ia;
      return a < b;
    });
    mesh.interior_edge_count[k] = static_cast<std::size_t>(std::count_if(
        list.begin(), list.end(), [&](std::size_t id) { return mesh.edges[id].is_interior(); }));
  }

  // Twice the largest center-to-vertex distance, assuming each edge's
  // endpoints are symmetric about the foot of the perpendicular from the
  // center. For rectangles this is the bounding-box diagonal.
  for (std::size_t k = 0; k < ncells; ++k) {
    double r = 0.0;
    for (std::size_t id : mesh.cell_edges[k]) {
      const Edge& e = mesh.edges[id];
      r = std::max(r, std::hypot(e.center_to_edge(k), 0.5 * e.length));
    }
    mesh.diameters[k] = 2.0 * r;
  }
  mesh.size = mesh.diameters.empty() ? 0.0 : *std::max_element(mesh.diameters.begin(), mesh.diameters.end());
  mesh.xi = regularity_xi(mesh);
}

}  // namespace

std::size_t Mesh::num_interior_edges() const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.is_interior(); }));
}

Mesh build_cartesian(std::size_t nx, std::size_t ny, double lx, double ly) {
  if (nx == 0 || ny == 0) throw PreconditionError("build_cartesian: nx and ny must be positive");
  if (!(lx > 0.0) || !(ly > 0.0)) throw PreconditionError("build_cartesian: Lx and Ly must be positive");

  const double hx = lx / static_cast<double>(nx);
  const double hy = ly / static_cast<double>(ny);
  const auto cell_id = [nx](std::size_t ix, std::size_t iy) { return iy * nx + ix; };

  Mesh mesh;
  mesh.cartesian = CartesianInfo{nx, ny, lx, ly};
  mesh.cells.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      Cell c;
      c.id = cell_id(ix, iy);
      c.center = {(static_cast<double>(ix) + 0.5) * hx, (static_cast<double>(iy) + 0.5) * hy};
      c.area = hx * hy;
      mesh.cells.push_back(c);
    }
  }

  auto add_edge = [&mesh](std::size_t owner, std::ptrdiff_t neighbor, double length, double distance) {
    Edge e;
    e.id = mesh.edges.size();
    e.kind = neighbor == kNoCell ? EdgeKind::exterior : EdgeKind::interior;
    e.owner = owner;
    e.neighbor = neighbor;
    e.length = length;
    e.distance = distance;
    if (e.is_interior()) {
      e.owner_distance = 0.5 * distance;
      e.neighbor_distance = 0.5 * distance;
    } else {
      e.owner_distance = distance;
    }
    mesh.edges.push_back(e);
  };

  // Vertical interior edges, then horizontal interior edges.
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix + 1 < nx; ++ix)
      add_edge(cell_id(ix, iy), static_cast<std::ptrdiff_t>(cell_id(ix + 1, iy)), hy, hx);
  for (std::size_t iy = 0; iy + 1 < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix)
      add_edge(cell_id(ix, iy), static_cast<std::ptrdiff_t>(cell_id(ix, iy + 1)), hx, hy);

  // Boundary: left, right, bottom, top.
  for (std::size_t iy = 0; iy < ny; ++iy) add_edge(cell_id(0, iy), kNoCell, hy, 0.5 * hx);
  for (std::size_t iy = 0; iy < ny; ++iy) add_edge(cell_id(nx - 1, iy), kNoCell, hy, 0.5 * hx);
  for (std::size_t ix = 0; ix < nx; ++ix) add_edge(cell_id(ix, 0), kNoCell, hx, 0.5 * hy);
  for (std::size_t ix = 0; ix < nx; ++ix) add_edge(cell_id(ix, ny - 1), kNoCell, hx, 0.5 * hy);

  finalize(mesh);
  mesh.total_area = lx * ly;
  return mesh;
}

namespace {

struct LineReader {
  std::istringstream in;
  std::size_t line_no = 0;

  explicit LineReader(std::string_view text) : in(std::string(text)) {}

  // Next non-empty line with comments stripped, split into tokens.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      tokens.clear();
      for (std::string tok; ls >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  std::vector<std::string> expect(const char* what) {
    std::vector<std::string> tokens;
    if (!next(tokens)) throw ParseError(line_no + 1, fmt::format("unexpected end of file, expected {}", what));
    return tokens;
  }
};

double to_double(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, fmt::format("invalid number '{}'", tok));
  }
  if (pos != tok.size()) throw ParseError(line, fmt::format("invalid number '{}'", tok));
  return v;
}

long long to_int(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, fmt::format("invalid integer '{}'", tok));
  }
  if (pos != tok.size()) throw ParseError(line, fmt::format("invalid integer '{}'", tok));
  return v;
}

std::size_t read_count(LineReader& r, const char* keyword) {
  auto tokens = r.expect(keyword);
  if (tokens.size() != 2 || tokens[0] != keyword)
    throw ParseError(r.line_no, fmt::format("expected '{} <count>'", keyword));
  const long long n = to_int(tokens[1], r.line_no);
  if (n < 0) throw ParseError(r.line_no, fmt::format("{} must be nonnegative", keyword));
  return static_cast<std::size_t>(n);
}

}  // namespace

Mesh load_mesh(std::string_view text) {
  LineReader r(text);
  auto header = r.expect("MESH2D");
  if (header.size() != 1 || header[0] != "MESH2D") throw ParseError(r.line_no, "expected 'MESH2D' header");

  Mesh mesh;
  const std::size_t ncells = read_count(r, "NCELLS");
  mesh.cells.reserve(ncells);
  for (std::size_t k = 0; k < ncells; ++k) {
    auto t = r.expect("cell record");
    if (t.size() != 4) throw ParseError(r.line_no, "cell record needs '<id> <cx> <cy> <area>'");
    if (to_int(t[0], r.line_no) != static_cast<long long>(k))
      throw ParseError(r.line_no, fmt::format("cell ids must be consecutive from 0, expected {}", k));
    Cell c;
    c.id = k;
    c.center = {to_double(t[1], r.line_no), to_double(t[2], r.line_no)};
    c.area = to_double(t[3], r.line_no);
    mesh.cells.push_back(c);
  }

  const std::size_t nedges = read_count(r, "NEDGES");
  mesh.edges.reserve(nedges);
  for (std::size_t s = 0; s < nedges; ++s) {
    auto t = r.expect("edge record");
    if (t.size() != 5) throw ParseError(r.line_no, "edge record needs '<id> <K> <L|-1> <length> <d>'");
    if (to_int(t[0], r.line_no) != static_cast<long long>(s))
      throw ParseError(r.line_no, fmt::format("edge ids must be consecutive from 0, expected {}", s));
    const long long owner = to_int(t[1], r.line_no);
    const long long neighbor = to_int(t[2], r.line_no);
    if (owner < 0 || owner >= static_cast<long long>(ncells))
      throw ParseError(r.line_no, fmt::format("edge {} references missing cell {}", s, owner));
    if (neighbor != kNoCell && (neighbor < 0 || neighbor >= static_cast<long long>(ncells)))
      throw ParseError(r.line_no, fmt::format("edge {} references missing cell {}", s, neighbor));
    if (neighbor == owner) throw ParseError(r.line_no, fmt::format("edge {} joins cell {} to itself", s, owner));

    Edge e;
    e.id = s;
    e.owner = static_cast<std::size_t>(owner);
    e.neighbor = static_cast<std::ptrdiff_t>(neighbor);
    e.kind = neighbor == kNoCell ? EdgeKind::exterior : EdgeKind::interior;
    e.length = to_double(t[3], r.line_no);
    e.distance = to_double(t[4], r.line_no);
    if (e.is_interior()) {
      e.owner_distance = 0.5 * e.distance;
      e.neighbor_distance = 0.5 * e.distance;
    } else {
      e.owner_distance = e.distance;
    }
    mesh.edges.push_back(e);
  }
  std::vector<std::string> extra;
  if (r.next(extra)) throw ParseError(r.line_no, "trailing content after edge records");

  finalize(mesh);
  for (const auto& c : mesh.cells) mesh.total_area += c.area;

  const auto report = validate_mesh(mesh);
  if (!report.ok()) throw MeshValidationError(report.violations.front());
  return mesh;
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_mesh(ss.str());
}

std::string write_mesh(const Mesh& mesh) {
  std::string out = "MESH2D\n";
  out += fmt::format("NCELLS {}\n", mesh.cells.size());
  for (const auto& c : mesh.cells)
    out += fmt::format("{} {:.17g} {:.17g} {:.17g}\n", c.id, c.center.x, c.center.y, c.area);
  out += fmt::format("NEDGES {}\n", mesh.edges.size());
  for (const auto& e : mesh.edges)
    out += fmt::format("{} {} {} {:.17g} {:.17g}\n", e.id, e.owner, e.neighbor, e.length, e.distance);
  return out;
}

double regularity_xi(const Mesh& mesh) {
  double xi = std::numeric_limits<double>::infinity();
  for (const auto& e : mesh.edges) {
    xi = std::min(xi, e.owner_distance / e.distance);
    if (e.is_interior()) xi = std::min(xi, e.neighbor_distance / e.distance);
  }
  return mesh.edges.empty() ? 0.0 : xi;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += '\n';
    out += v;
  }
  return out;
}

ValidationReport validate_mesh(const Mesh& mesh) {
  ValidationReport report;
  auto fail = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };
  const std::size_t ncells = mesh.cells.size();

  if (ncells == 0) fail("mesh has no cells");

  double area_sum = 0.0;
  for (std::size_t k = 0; k < ncells; ++k) {
    const Cell& c = mesh.cells[k];
    if (c.id != k) fail(fmt::format("cell {}: id {} does not match its position", k, c.id));
    if (!(c.area > 0.0) || !std::isfinite(c.area)) fail(fmt::format("cell {}: area {} is not positive", k, c.area));
    if (!std::isfinite(c.center.x) || !std::isfinite(c.center.y)) fail(fmt::format("cell {}: center is not finite", k));
    if (mesh.cartesian) {
      const auto& g = *mesh.cartesian;
      if (c.center.x < 0.0 || c.center.x > g.lx || c.center.y < 0.0 || c.center.y > g.ly)
        fail(fmt::format("cell {}: center lies outside the domain bounding box", k));
    }
    area_sum += c.area;
  }

  const bool lists_sized = mesh.cell_edges.size() == ncells;
  if (!lists_sized) fail("per-cell edge lists do not match the cell count");

  for (std::size_t s = 0; s < mesh.edges.size(); ++s) {
    const Edge& e = mesh.edges[s];
    if (e.id != s) fail(fmt::format("edge {}: id {} does not match its position", s, e.id));
    bool cells_ok = true;
    if (e.owner >= ncells) {
      fail(fmt::format("edge {}: owner cell {} does not exist", s, e.owner));
      cells_ok = false;
    }
    if (e.is_interior()) {
      if (e.neighbor < 0 || static_cast<std::size_t>(e.neighbor) >= ncells) {
        fail(fmt::format("edge {}: neighbor cell {} does not exist", s, e.neighbor));
        cells_ok = false;
      } else if (static_cast<std::size_t>(e.neighbor) == e.owner) {
        fail(fmt::format("edge {}: interior edge joins cell {} to itself", s, e.owner));
      }
    } else if (e.neighbor != kNoCell) {
      fail(fmt::format("edge {}: exterior edge has a neighbor", s));
    }
    if (!(e.length > 0.0) || !std::isfinite(e.length)) fail(fmt::format("edge {}: length {} is not positive", s, e.length));
    if (!(e.distance > 0.0) || !std::isfinite(e.distance))
      fail(fmt::format("edge {}: distance {} is not positive", s, e.distance));
    if (!(e.transmissibility > 0.0)) fail(fmt::format("edge {}: transmissibility {} is not positive", s, e.transmissibility));
    const double expected = e.length / e.distance;
    if (std::abs(e.transmissibility - expected) > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(expected))
      fail(fmt::format("edge {}: transmissibility {} differs from length/distance {}", s, e.transmissibility, expected));
    if (!(e.owner_distance > 0.0) || (e.is_interior() && !(e.neighbor_distance > 0.0)))
      fail(fmt::format("edge {}: center-to-edge distance is not positive", s));

    if (cells_ok && lists_sized) {
      auto listed = [&](std::size_t cell) {
        const auto& l = mesh.cell_edges[cell];
        return std::find(l.begin(), l.end(), s) != l.end();
      };
      if (!listed(e.owner)) fail(fmt::format("edge {}: missing from the edge list of cell {}", s, e.owner));
      if (e.is_interior() && !listed(static_cast<std::size_t>(e.neighbor)))
        fail(fmt::format("edge {}: missing from the edge list of cell {}", s, e.neighbor));
    }
  }

  if (lists_sized) {
    for (std::size_t k = 0; k < ncells; ++k) {
      for (std::size_t id : mesh.cell_edges[k]) {
        if (id >= mesh.edges.size()) {
          fail(fmt::format("cell {}: lists missing edge {}", k, id));
          continue;
        }
        const Edge& e = mesh.edges[id];
        const bool bounds = e.owner == k || (e.is_interior() && static_cast<std::size_t>(e.neighbor) == k);
        if (!bounds) fail(fmt::format("cell {}: lists edge {} which does not bound it", k, id));
      }
    }
  }

  if (!(std::abs(area_sum - mesh.total_area) <= 1e-12 * std::abs(mesh.total_area)))
    fail(fmt::format("sum of cell areas {} differs from total area {}", area_sum, mesh.total_area));
  if (!(mesh.xi > 0.0 && mesh.xi <= 1.0)) fail(fmt::format("regularity constant xi = {} is outside (0, 1]", mesh.xi));

  return report;
}

}  // namespace crossdiff
