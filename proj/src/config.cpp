#include "crossdiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "crossdiff/errors.hpp"

namespace crossdiff {

double InitProfile::value_at(double x, double y) const {
  switch (kind) {
    case Kind::constant:
      return params.at(0);
    case Kind::gaussian: {
      const double dx = x - params.at(0);
      const double dy = y - params.at(1);
      const double sigma = params.at(2);
      return params.at(3) * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
    case Kind::checkerboard:
      break;
  }
  throw PreconditionError("checkerboard profiles are defined per cell, not per point");
}

void RunConfig::validate() const {
  if (n < 2) throw ConfigError("model.n: at least two species are required");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("model.delta: must be positive");
  if (a.size() != n) throw ConfigError(fmt::format("model.a: expected {} rows, found {}", n, a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != n)
      throw ConfigError(fmt::format("model.a.{}: expected {} entries, found {}", i + 1, n, a[i].size()));
    for (double v : a[i])
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("model.a.{}: entries must be positive", i + 1));
  }
  if (pi) {
    if (pi->size() != n) throw ConfigError(fmt::format("model.pi: expected {} entries", n));
    for (double v : *pi)
      if (!(v > 0.0)) throw ConfigError("model.pi: entries must be positive");
  }

  if (mesh_kind == MeshKind::cartesian) {
    if (nx < 1) throw ConfigError("mesh.nx: must be at least 1");
    if (ny < 1) throw ConfigError("mesh.ny: must be at least 1");
    if (!(lx > 0.0)) throw ConfigError("mesh.lx: must be positive");
    if (!(ly > 0.0)) throw ConfigError("mesh.ly: must be positive");
  } else if (mesh_file.empty()) {
    throw ConfigError("mesh.file: required when mesh.type = file");
  }

  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ConfigError("time.t_final: must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time.dt: must be positive");
  if (dt > t_final) throw ConfigError("time.dt: must not exceed time.t_final");

  if (init.size() != n) throw ConfigError(fmt::format("init: expected {} profiles, found {}", n, init.size()));
  for (std::size_t i = 0; i < init.size(); ++i) {
    const auto& p = init[i];
    const auto key = fmt::format("init.{}", i + 1);
    const std::size_t want = p.kind == InitProfile::Kind::constant ? 1 : p.kind == InitProfile::Kind::gaussian ? 4 : 2;
    if (p.params.size() != want) throw ConfigError(fmt::format("{}: expected {} parameters", key, want));
    for (double v : p.params)
      if (!std::isfinite(v)) throw ConfigError(key + ": parameters must be finite");
    switch (p.kind) {
      case InitProfile::Kind::constant:
        if (p.params[0] < 0.0) throw ConfigError(key + ": constant must be nonnegative");
        break;
      case InitProfile::Kind::gaussian:
        if (!(p.params[2] > 0.0)) throw ConfigError(key + ": gaussian sigma must be positive");
        if (p.params[3] < 0.0) throw ConfigError(key + ": gaussian amplitude must be nonnegative");
        break;
      case InitProfile::Kind::checkerboard:
        if (p.params[0] < 0.0 || p.params[1] < 0.0) throw ConfigError(key + ": checkerboard values must be nonnegative");
        if (mesh_kind != MeshKind::cartesian) throw ConfigError(key + ": checkerboard needs a Cartesian mesh");
        break;
    }
  }
  solver.validate();
}

std::size_t RunConfig::num_steps() const { return static_cast<std::size_t>(std::llround(t_final / dt)); }

bool RunConfig::step_mismatch() const {
  const double steps = static_cast<double>(num_steps());
  return std::abs(steps * dt - t_final) > 1e-9 * t_final;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Entries {
 public:
  void put(const std::string& key, Entry entry, bool replace) {
    if (!replace && map_.count(key)) throw ParseError(entry.line, fmt::format("duplicate key '{}'", key));
    map_[key] = std::move(entry);
  }

  std::optional<Entry> take(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    Entry e = std::move(it->second);
    map_.erase(it);
    return e;
  }

  Entry require(const std::string& key) {
    auto e = take(key);
    if (!e) throw ParseError(0, fmt::format("missing required key '{}'", key));
    return *e;
  }

  /// Removes and returns every "<prefix><k>" entry, indexed by k >= 1.
  std::map<std::size_t, Entry> take_indexed(const std::string& prefix) {
    std::map<std::size_t, Entry> out;
    for (auto it = map_.begin(); it != map_.end();) {
      const std::string& key = it->first;
      if (key.rfind(prefix, 0) == 0) {
        const std::string idx = key.substr(prefix.size());
        if (!idx.empty() && std::all_of(idx.begin(), idx.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
          const auto k = static_cast<std::size_t>(std::stoul(idx));
          if (k == 0) throw ParseError(it->second.line, fmt::format("'{}': indices start at 1", key));
          out[k] = std::move(it->second);
          it = map_.erase(it);
          continue;
        }
      }
      ++it;
    }
    return out;
  }

  void finish() const {
    if (!map_.empty()) {
      const auto& [key, entry] = *map_.begin();
      throw ParseError(entry.line, fmt::format("unknown key '{}'", key));
    }
  }

 private:
  std::map<std::string, Entry> map_;
};

std::vector<std::string> split(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double parse_double(const std::string& key, const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != tok.size()) throw ParseError(line, fmt::format("{}: invalid number '{}'", key, tok));
  return v;
}

double get_double(const std::string& key, const Entry& e) {
  const auto toks = split(e.value);
  if (toks.size() != 1) throw ParseError(e.line, fmt::format("{}: expected one number", key));
  return parse_double(key, toks[0], e.line);
}

std::vector<double> get_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  for (const auto& tok : split(e.value)) out.push_back(parse_double(key, tok, e.line));
  if (out.empty()) throw ParseError(e.line, fmt::format("{}: expected a list of numbers", key));
  return out;
}

long long get_int(const std::string& key, const Entry& e) {
  const auto toks = split(e.value);
  std::size_t pos = 0;
  long long v = 0;
  if (toks.size() == 1) {
    try {
      v = std::stoll(toks[0], &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
  }
  if (toks.size() != 1 || pos == 0 || pos != toks[0].size())
    throw ParseError(e.line, fmt::format("{}: invalid integer '{}'", key, e.value));
  return v;
}

std::size_t get_count(const std::string& key, const Entry& e) {
  const long long v = get_int(key, e);
  if (v < 0) throw ParseError(e.line, fmt::format("{}: must be nonnegative", key));
  return static_cast<std::size_t>(v);
}

bool get_bool(const std::string& key, const Entry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  throw ParseError(e.line, fmt::format("{}: expected true or false", key));
}

InitProfile get_profile(const std::string& key, const Entry& e) {
  auto toks = split(e.value);
  if (toks.empty()) throw ParseError(e.line, fmt::format("{}: empty profile", key));
  const std::string kind = toks.front();
  std::vector<double> params;
  for (std::size_t t = 1; t < toks.size(); ++t) params.push_back(parse_double(key, toks[t], e.line));
  InitProfile p;
  if (kind == "constant") {
    p.kind = InitProfile::Kind::constant;
  } else if (kind == "gaussian") {
    p.kind = InitProfile::Kind::gaussian;
  } else if (kind == "checkerboard") {
    p.kind = InitProfile::Kind::checkerboard;
  } else {
    throw ParseError(e.line, fmt::format("{}: unknown profile '{}'", key, kind));
  }
  p.params = std::move(params);
  const std::size_t want = p.kind == InitProfile::Kind::constant ? 1 : p.kind == InitProfile::Kind::gaussian ? 4 : 2;
  if (p.params.size() != want)
    throw ParseError(e.line, fmt::format("{}: '{}' takes {} parameters", key, kind, want));
  return p;
}

void add_line(Entries& entries, const std::string& raw, std::size_t line, bool replace) {
  std::string text = raw;
  if (auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
  text = trim(text);
  if (text.empty()) return;
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ParseError(line, fmt::format("expected 'section.key = value', got '{}'", text));
  std::string key = trim(std::string_view(text).substr(0, eq));
  std::string value = trim(std::string_view(text).substr(eq + 1));
  if (key.empty() || key.find('.') == std::string::npos)
    throw ParseError(line, fmt::format("key '{}' must have the form section.key", key));
  entries.put(key, Entry{std::move(value), line}, replace);
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  Entries entries;
  {
    std::istringstream in{std::string(text)};
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) add_line(entries, line, ++line_no, false);
  }
  for (const auto& ov : overrides) {
    try {
      add_line(entries, ov, 0, true);
    } catch (const ParseError& e) {
      throw ParseError(0, fmt::format("override '{}': {}", ov, e.what()));
    }
  }

  RunConfig c;
  c.n = get_count("model.n", entries.require("model.n"));
  c.delta = get_double("model.delta", entries.require("model.delta"));
  {
    auto rows = entries.take_indexed("model.a.");
    std::size_t expect = 1;
    for (auto& [k, e] : rows) {
      const auto key = fmt::format("model.a.{}", k);
      if (k != expect) throw ConfigError(fmt::format("model.a: row {} is missing", expect));
      c.a.push_back(get_list(key, e));
      ++expect;
    }
  }
  if (auto e = entries.take("model.pi")) c.pi = get_list("model.pi", *e);

  if (auto e = entries.take("mesh.type")) {
    if (e->value == "cartesian") {
      c.mesh_kind = RunConfig::MeshKind::cartesian;
    } else if (e->value == "file") {
      c.mesh_kind = RunConfig::MeshKind::file;
    } else {
      throw ParseError(e->line, fmt::format("mesh.type: expected 'cartesian' or 'file', got '{}'", e->value));
    }
  }
  if (c.mesh_kind == RunConfig::MeshKind::cartesian) {
    c.nx = get_count("mesh.nx", entries.require("mesh.nx"));
    c.ny = get_count("mesh.ny", entries.require("mesh.ny"));
  } else {
    c.mesh_file = entries.require("mesh.file").value;
    if (auto e = entries.take("mesh.nx")) c.nx = get_count("mesh.nx", *e);
    if (auto e = entries.take("mesh.ny")) c.ny = get_count("mesh.ny", *e);
  }
  if (auto e = entries.take("mesh.lx")) c.lx = get_double("mesh.lx", *e);
  if (auto e = entries.take("mesh.ly")) c.ly = get_double("mesh.ly", *e);

  c.t_final = get_double("time.t_final", entries.require("time.t_final"));
  c.dt = get_double("time.dt", entries.require("time.dt"));

  {
    auto profiles = entries.take_indexed("init.");
    std::size_t expect = 1;
    for (auto& [k, e] : profiles) {
      const auto key = fmt::format("init.{}", k);
      if (k != expect) throw ConfigError(fmt::format("init: profile {} is missing", expect));
      c.init.push_back(get_profile(key, e));
      ++expect;
    }
  }

  auto& s = c.solver;
  if (auto e = entries.take("solver.newton_tol")) s.newton_tol = get_double("solver.newton_tol", *e);
  if (auto e = entries.take("solver.max_newton_iters"))
    s.max_newton_iters = static_cast<int>(get_int("solver.max_newton_iters", *e));
  if (auto e = entries.take("solver.line_search_shrink"))
    s.line_search_shrink = get_double("solver.line_search_shrink", *e);
  if (auto e = entries.take("solver.max_line_search"))
    s.max_line_search = static_cast<int>(get_int("solver.max_line_search", *e));
  if (auto e = entries.take("solver.eps_ladder")) s.eps_ladder = get_list("solver.eps_ladder", *e);
  if (auto e = entries.take("solver.fixed_point_damping"))
    s.fixed_point_damping = get_double("solver.fixed_point_damping", *e);
  if (auto e = entries.take("solver.max_fp_iters")) s.max_fp_iters = static_cast<int>(get_int("solver.max_fp_iters", *e));
  if (auto e = entries.take("solver.tol_neg")) s.tol_neg = get_double("solver.tol_neg", *e);
  if (auto e = entries.take("solver.entropy_slack_factor"))
    s.entropy_slack_factor = get_double("solver.entropy_slack_factor", *e);

  if (auto e = entries.take("output.directory")) c.output_dir = e->value;
  if (auto e = entries.take("output.cadence")) c.field_cadence = get_count("output.cadence", *e);
  if (auto e = entries.take("output.vtk")) c.vtk = get_bool("output.vtk", *e);

  entries.finish();
  c.validate();
  return c;
}

RunConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) {
    if (!out.empty()) out += ' ';
    out += fmt::format("{:.17g}", x);
  }
  return out;
}

}  // namespace

std::string emit_config(const RunConfig& c) {
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
  line("model.n", std::to_string(c.n));
  line("model.delta", fmt::format("{:.17g}", c.delta));
  for (std::size_t i = 0; i < c.a.size(); ++i) line(fmt::format("model.a.{}", i + 1), join(c.a[i]));
  if (c.pi) line("model.pi", join(*c.pi));

  if (c.mesh_kind == RunConfig::MeshKind::cartesian) {
    line("mesh.type", "cartesian");
    line("mesh.nx", std::to_string(c.nx));
    line("mesh.ny", std::to_string(c.ny));
  } else {
    line("mesh.type", "file");
    line("mesh.file", c.mesh_file);
    if (c.nx != 0) line("mesh.nx", std::to_string(c.nx));
    if (c.ny != 0) line("mesh.ny", std::to_string(c.ny));
  }
  line("mesh.lx", fmt::format("{:.17g}", c.lx));
  line("mesh.ly", fmt::format("{:.17g}", c.ly));

  line("time.t_final", fmt::format("{:.17g}", c.t_final));
  line("time.dt", fmt::format("{:.17g}", c.dt));

  for (std::size_t i = 0; i < c.init.size(); ++i) {
    const auto& p = c.init[i];
    const char* kind = p.kind == InitProfile::Kind::constant   ? "constant"
                       : p.kind == InitProfile::Kind::gaussian ? "gaussian"
                                                               : "checkerboard";
    line(fmt::format("init.{}", i + 1), std::string(kind) + " " + join(p.params));
  }

  const auto& s = c.solver;
  line("solver.newton_tol", fmt::format("{:.17g}", s.newton_tol));
  line("solver.max_newton_iters", std::to_string(s.max_newton_iters));
  line("solver.line_search_shrink", fmt::format("{:.17g}", s.line_search_shrink));
  line("solver.max_line_search", std::to_string(s.max_line_search));
  line("solver.eps_ladder", join(s.eps_ladder));
  line("solver.fixed_point_damping", fmt::format("{:.17g}", s.fixed_point_damping));
  line("solver.max_fp_iters", std::to_string(s.max_fp_iters));
  line("solver.tol_neg", fmt::format("{:.17g}", s.tol_neg));
  line("solver.entropy_slack_factor", fmt::format("{:.17g}", s.entropy_slack_factor));

  line("output.directory", c.output_dir);
  line("output.cadence", std::to_string(c.field_cadence));
  line("output.vtk", c.vtk ? "true" : "false");
  return out;
}

InteractionMatrix interaction_matrix(const RunConfig& config) {
  InteractionMatrix m;
  const auto n = static_cast<Eigen::Index>(config.n);
  m.a.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m.a(i, j) = config.a.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j));
  m.delta = config.delta;
  return m;
}

ModelData build_model(const RunConfig& config) {
  std::optional<Eigen::VectorXd> pi;
  if (config.pi) pi = Eigen::Map<const Eigen::VectorXd>(config.pi->data(), static_cast<Eigen::Index>(config.pi->size()));
  return build_model(interaction_matrix(config), pi);
}

Mesh build_mesh(const RunConfig& config) {
  if (config.mesh_kind == RunConfig::MeshKind::cartesian)
    return build_cartesian(config.nx, config.ny, config.lx, config.ly);
  return load_mesh_file(config.mesh_file);
}

State initial_state(const RunConfig& config, const Mesh& mesh, const ModelData& model) {
  if (config.init.size() != model.n()) throw PreconditionError("initial_state: one profile per species is required");
  State u(model.n(), mesh.num_cells());
  for (std::size_t i = 0; i < model.n(); ++i) {
    const auto& p = config.init[i];
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
      if (p.kind == InitProfile::Kind::checkerboard) {
        if (!mesh.cartesian) throw PreconditionError("checkerboard initial data needs a Cartesian mesh");
        const std::size_t ix = k % mesh.cartesian->nx;
        const std::size_t iy = k / mesh.cartesian->nx;
        u(i, k) = (ix + iy) % 2 == 0 ? p.params[0] : p.params[1];
      } else {
        u(i, k) = p.value_at(mesh.cells[k].center.x, mesh.cells[k].center.y);
      }
    }
  }
  return u;
}

}  // namespace crossdiff
