#include "hce/config.hpp"

#include <fstream>
#include <map>
#include <set>

#include "hce/errors.hpp"
#include "text_util.hpp"

namespace hce {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string token;
  const auto flush = [&] {
    if (token.empty()) return;
    try {
      out.push_back(detail::parse_double(token, 0));
    } catch (const ParseError&) {
      throw ConfigError(key, "'" + token + "' is not a number");
    }
    token.clear();
  };
  for (char ch : value) {
    if (ch == ',' || ch == ' ' || ch == '\t') flush();
    else token += ch;
  }
  flush();
  return out;
}

double parse_scalar(const std::string& key, const std::string& value) {
  const auto v = parse_list(key, value);
  if (v.size() != 1) throw ConfigError(key, "expected one number");
  return v[0];
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_scalar(key, value);
  if (v != static_cast<double>(static_cast<int>(v))) throw ConfigError(key, "expected an integer");
  return static_cast<int>(v);
}

Rect parse_rect(const std::string& key, const std::string& value) {
  const auto v = parse_list(key, value);
  if (v.size() != 4) throw ConfigError(key, "expected x0, y0, x1, y1");
  return {v[0], v[1], v[2], v[3]};
}

std::size_t max_params(const std::string& kind) {
  static const std::map<std::string, std::size_t> table{{"zero", 0},           {"constant", 2},
                                                        {"gravity", 1},        {"rigid_translation", 2},
                                                        {"rigid_rotation", 3}, {"poly_xy", 8}};
  const auto it = table.find(kind);
  return it == table.end() ? std::string::npos : it->second;
}

}  // namespace

void StudyConfig::validate() const {
  if (!(outer.x1 > outer.x0 && outer.y1 > outer.y0)) throw ConfigError("geometry.outer", "empty rectangle");
  if (!(inclusion.x1 > inclusion.x0 && inclusion.y1 > inclusion.y0))
    throw ConfigError("geometry.inclusion", "empty rectangle");
  if (n < 2) throw ConfigError("geometry.n", "needs n >= 2");
  if (etas.empty()) throw ConfigError("study.eta", "needs at least one value");
  for (double e : etas)
    if (!(e > 0.0)) throw ConfigError("study.eta", "values must be > 0");
  if (jmax < 0) throw ConfigError("study.jmax", "needs jmax >= 0");
  if (!(solver_tol > 0.0)) throw ConfigError("tolerances.solver", "must be > 0");
  if (!(compatibility_tol > 0.0)) throw ConfigError("tolerances.compatibility", "must be > 0");
  if (output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
  (void)make_field(load, "load.kind");
  (void)make_field(boundary, "boundary.kind");
  try {
    material.validate();
  } catch (const MaterialError& e) {
    throw ConfigError("material", e.what());
  }
}

StudyConfig parse_config(std::istream& in) {
  StudyConfig c;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (!seen.insert(key).second) throw ConfigError(key, "given twice");

    if (key == "geometry.outer") c.outer = parse_rect(key, value);
    else if (key == "geometry.inclusion") c.inclusion = parse_rect(key, value);
    else if (key == "geometry.n") c.n = parse_int(key, value);
    else if (key == "geometry.mesh_file") c.mesh_file = value;
    else if (key == "material.nu_background") c.material.nu_background = parse_scalar(key, value);
    else if (key == "material.nu_inclusion") c.material.nu_inclusion = parse_scalar(key, value);
    else if (key == "material.nu_max") c.material.nu_max = parse_scalar(key, value);
    else if (key == "load.kind") c.load.kind = value;
    else if (key == "load.params") c.load.params = parse_list(key, value);
    else if (key == "boundary.kind") c.boundary.kind = value;
    else if (key == "boundary.params") c.boundary.params = parse_list(key, value);
    else if (key == "study.eta") c.etas = parse_list(key, value);
    else if (key == "study.jmax") c.jmax = parse_int(key, value);
    else if (key == "tolerances.solver") c.solver_tol = parse_scalar(key, value);
    else if (key == "tolerances.compatibility") c.compatibility_tol = parse_scalar(key, value);
    else if (key == "output.dir") c.output_dir = value;
    else throw ConfigError(key, "unknown key");
  }
  // A kind given without params starts from an empty list, not the default's.
  if (seen.count("load.kind") && !seen.count("load.params")) c.load.params.clear();
  c.validate();
  return c;
}

StudyConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  return parse_config(in);
}

VectorField make_field(const FieldSpec& spec, const std::string& key) {
  const std::size_t limit = max_params(spec.kind);
  if (limit == std::string::npos) throw ConfigError(key, "unknown field kind '" + spec.kind + "'");
  if (spec.params.size() > limit)
    throw ConfigError(key, spec.kind + " takes at most " + std::to_string(limit) + " params");
  std::vector<double> p = spec.params;
  p.resize(limit, 0.0);
  if (spec.kind == "zero") return [](double, double) { return Vec2{0.0, 0.0}; };
  if (spec.kind == "constant" || spec.kind == "rigid_translation")
    return [a = p[0], b = p[1]](double, double) { return Vec2{a, b}; };
  if (spec.kind == "gravity") {
    const double g = spec.params.empty() ? 1.0 : p[0];
    return [g](double, double) { return Vec2{0.0, -g}; };
  }
  if (spec.kind == "rigid_rotation") return rigid_motion(0.0, 0.0, p[0], {p[1], p[2]});
  return [p](double x, double y) {
    return Vec2{p[0] + p[1] * x + p[2] * y + p[3] * x * y, p[4] + p[5] * x + p[6] * y + p[7] * x * y};
  };
}

ProblemData build_problem(const StudyConfig& config) {
  config.validate();
  std::shared_ptr<const Mesh> mesh;
  if (config.mesh_file) mesh = std::make_shared<const Mesh>(load_mesh_file(*config.mesh_file));
  else mesh = std::make_shared<const Mesh>(generate_rect_with_inclusion(config.outer, config.inclusion, config.n));
  return {mesh, config.material, make_field(config.load, "load.kind"), make_field(config.boundary, "boundary.kind")};
}

}  // namespace hce
