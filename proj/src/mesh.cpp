#include "hce/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "hce/errors.hpp"
#include "text_util.hpp"

namespace hce {

namespace {

using EdgeKey = std::pair<Index, Index>;

EdgeKey edge_key(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Grid index of coordinate `v` on a grid starting at `origin` with `n` cells
// per unit; -1 when `v` is not on a grid line.
long grid_index(double v, double origin, int n) {
  const double s = (v - origin) * n;
  const double r = std::round(s);
  if (std::abs(s - r) > 1e-9 * std::max(1.0, std::abs(s))) return -1;
  return static_cast<long>(r);
}

}  // namespace

double signed_area2(const Vertex& a, const Vertex& b, const Vertex& c) {
  return (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
}

double triangle_area(const Mesh& mesh, Index t) {
  const auto p = mesh.corners(t);
  return 0.5 * signed_area2(p[0], p[1], p[2]);
}

double max_edge_length(const Mesh& mesh) {
  double h = 0.0;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto& a = mesh.vertices[tri.vertex_ids[k]];
      const auto& b = mesh.vertices[tri.vertex_ids[(k + 1) % 3]];
      h = std::max(h, std::hypot(b.x - a.x, b.y - a.y));
    }
  }
  return h;
}

Mesh generate_rect_with_inclusion(const Rect& outer, const Rect& inclusion, int n) {
  if (n < 2) throw GeometryError("subdivisions per unit must be >= 2, got " + std::to_string(n));
  if (!(outer.x1 > outer.x0 && outer.y1 > outer.y0))
    throw GeometryError("outer rectangle is empty");
  if (!(inclusion.x1 > inclusion.x0 && inclusion.y1 > inclusion.y0))
    throw GeometryError("inclusion rectangle is empty");

  const long nx = grid_index(outer.x1, outer.x0, n);
  const long ny = grid_index(outer.y1, outer.y0, n);
  if (nx < 1 || ny < 1)
    throw GeometryError("outer extents are not a whole number of cells of size 1/" +
                        std::to_string(n));

  if (inclusion.x0 <= outer.x0 || inclusion.y0 <= outer.y0 || inclusion.x1 >= outer.x1 ||
      inclusion.y1 >= outer.y1)
    throw GeometryError("inclusion touches or crosses the outer boundary");

  const long ix0 = grid_index(inclusion.x0, outer.x0, n);
  const long ix1 = grid_index(inclusion.x1, outer.x0, n);
  const long iy0 = grid_index(inclusion.y0, outer.y0, n);
  const long iy1 = grid_index(inclusion.y1, outer.y0, n);
  if (ix0 < 0 || ix1 < 0 || iy0 < 0 || iy1 < 0)
    throw GeometryError("inclusion corners are not on the grid of spacing 1/" + std::to_string(n));
  if (ix0 <= 0 || iy0 <= 0 || ix1 >= nx || iy1 >= ny)
    throw GeometryError("inclusion touches or crosses the outer boundary");

  Mesh m;
  const auto vid = [nx](long i, long j) { return static_cast<Index>(j * (nx + 1) + i); };
  m.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      m.vertices.push_back({outer.x0 + outer.width() * static_cast<double>(i) / static_cast<double>(nx),
                            outer.y0 + outer.height() * static_cast<double>(j) / static_cast<double>(ny)});
    }
  }
  m.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (long j = 0; j < ny; ++j) {
    for (long i = 0; i < nx; ++i) {
      const bool inside = i >= ix0 && i < ix1 && j >= iy0 && j < iy1;
      const Region r = inside ? Region::Inclusion : Region::Background;
      m.triangles.push_back({{vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)}, r});
      m.triangles.push_back({{vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)}, r});
    }
  }

  // Boundary loops, counterclockwise.
  const auto loop = [&](long a0, long b0, long a1, long b1, EdgeMarker marker) {
    for (long i = a0; i < a1; ++i) m.boundary_edges.push_back({{vid(i, b0), vid(i + 1, b0)}, marker});
    for (long j = b0; j < b1; ++j) m.boundary_edges.push_back({{vid(a1, j), vid(a1, j + 1)}, marker});
    for (long i = a1; i > a0; --i) m.boundary_edges.push_back({{vid(i, b1), vid(i - 1, b1)}, marker});
    for (long j = b1; j > b0; --j) m.boundary_edges.push_back({{vid(a0, j), vid(a0, j - 1)}, marker});
  };
  loop(0, 0, nx, ny, EdgeMarker::Outer);
  loop(ix0, iy0, ix1, iy1, EdgeMarker::Interface);

  m.h = max_edge_length(m);
  return m;
}

bool ValidationReport::mentions(const std::string& what, Index index) const {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ValidationIssue& i) { return i.what == what && i.index == index; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "mesh valid";
  std::ostringstream os;
  os << issues.size() << " issue(s)";
  for (const auto& i : issues) os << "\n  [" << i.kind << "] " << i.what << " " << i.index << ": " << i.message;
  return os.str();
}

ValidationReport validate(const Mesh& mesh) {
  ValidationReport report;
  const auto add = [&](std::string kind, std::string what, Index idx, std::string msg) {
    report.issues.push_back({std::move(kind), std::move(what), idx, std::move(msg)});
  };
  const Index nv = mesh.vertices.size();

  for (Index v = 0; v < nv; ++v) {
    if (!std::isfinite(mesh.vertices[v].x) || !std::isfinite(mesh.vertices[v].y))
      add("nonfinite", "vertex", v, "coordinates not finite");
  }

  std::map<EdgeKey, std::vector<Index>> edge_tris;
  std::vector<bool> tri_ok(mesh.triangles.size(), true);
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const auto& ids = mesh.triangles[t].vertex_ids;
    if (ids[0] >= nv || ids[1] >= nv || ids[2] >= nv) {
      add("range", "triangle", t, "vertex index out of range");
      tri_ok[t] = false;
      continue;
    }
    if (ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2]) {
      add("duplicate-vertex", "triangle", t, "vertex indices not distinct");
      tri_ok[t] = false;
      continue;
    }
    if (!(triangle_area(mesh, t) > 0.0)) add("orientation", "triangle", t, "signed area not positive");
    for (int k = 0; k < 3; ++k) edge_tris[edge_key(ids[k], ids[(k + 1) % 3])].push_back(t);
  }

  for (const auto& [key, tris] : edge_tris) {
    if (tris.size() > 2)
      add("nonconforming", "triangle", tris[2],
          "edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ") shared by " +
              std::to_string(tris.size()) + " triangles");
  }

  std::set<EdgeKey> outer_marked;
  std::set<EdgeKey> interface_marked;
  std::set<Index> outer_vertices;
  for (Index e = 0; e < mesh.boundary_edges.size(); ++e) {
    const auto& be = mesh.boundary_edges[e];
    const Index a = be.vertex_ids[0];
    const Index b = be.vertex_ids[1];
    if (a >= nv || b >= nv || a == b) {
      add("range", "edge", e, "invalid vertex indices");
      continue;
    }
    const auto key = edge_key(a, b);
    const auto it = edge_tris.find(key);
    const std::vector<Index> none;
    const auto& tris = it == edge_tris.end() ? none : it->second;
    if (be.marker == EdgeMarker::Outer) {
      outer_marked.insert(key);
      outer_vertices.insert(a);
      outer_vertices.insert(b);
      if (tris.size() != 1 || mesh.triangles[tris[0]].region != Region::Background)
        add("marker", "edge", e, "outer edge must belong to exactly one background triangle");
    } else {
      interface_marked.insert(key);
      bool ok = tris.size() == 2;
      if (ok) {
        const Region r0 = mesh.triangles[tris[0]].region;
        const Region r1 = mesh.triangles[tris[1]].region;
        ok = r0 != r1;
      }
      if (!ok) add("marker", "edge", e, "interface edge must separate a background and an inclusion triangle");
    }
  }

  // Unmarked boundary edges and unmarked region interfaces.
  for (const auto& [key, tris] : edge_tris) {
    if (tris.size() == 1 && !outer_marked.count(key))
      add("boundary", "triangle", tris[0],
          "free edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
              ") not marked outer");
    if (tris.size() == 2 && mesh.triangles[tris[0]].region != mesh.triangles[tris[1]].region &&
        !interface_marked.count(key))
      add("interface", "triangle", tris[0],
          "region change across edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
              ") not marked interface");
  }

  // Inclusion: nonempty, edge-connected, away from the outer boundary.
  std::vector<Index> inc;
  for (Index t = 0; t < mesh.triangles.size(); ++t)
    if (tri_ok[t] && mesh.triangles[t].region == Region::Inclusion) inc.push_back(t);
  if (inc.empty()) {
    add("inclusion", "mesh", 0, "no inclusion triangles");
  } else {
    std::set<Index> seen{inc.front()};
    std::queue<Index> q;
    q.push(inc.front());
    while (!q.empty()) {
      const Index t = q.front();
      q.pop();
      const auto& ids = mesh.triangles[t].vertex_ids;
      for (int k = 0; k < 3; ++k) {
        for (Index nb : edge_tris[edge_key(ids[k], ids[(k + 1) % 3])]) {
          if (mesh.triangles[nb].region == Region::Inclusion && seen.insert(nb).second) q.push(nb);
        }
      }
    }
    for (Index t : inc) {
      if (!seen.count(t)) add("connectivity", "triangle", t, "inclusion not edge-connected");
      for (Index v : mesh.triangles[t].vertex_ids)
        if (outer_vertices.count(v)) add("compactness", "vertex", v, "inclusion vertex on outer boundary");
    }
  }
  return report;
}

Mesh load_mesh(std::istream& in) {
  detail::LineReader reader(in);
  Mesh m;

  auto header = reader.expect_record("header 'mesh2d 1'");
  if (header.size() != 2 || header[0] != "mesh2d")
    throw ParseError(reader.line(), "expected header 'mesh2d 1'");
  if (header[1] != "1") throw ParseError(reader.line(), "unsupported mesh version " + header[1]);

  const auto count = [&](const char* key) {
    auto rec = reader.expect_record(key);
    if (rec.size() != 2 || rec[0] != key)
      throw ParseError(reader.line(), std::string("expected '") + key + " <count>'");
    return detail::parse_index(rec[1], reader.line());
  };
  // A section keyword in place of a record means the declared count was too large.
  const auto record = [&](const char* section, Index declared, Index got) {
    auto rec = reader.expect_record(section);
    if (!rec.empty() && (rec[0] == "nt" || rec[0] == "ne" || rec[0] == "nv"))
      throw ParseError(reader.line(), std::string("count mismatch: declared ") + std::to_string(declared) +
                                          " " + section + ", found " + std::to_string(got));
    return rec;
  };

  const Index nv = count("nv");
  m.vertices.reserve(nv);
  for (Index i = 0; i < nv; ++i) {
    auto rec = record("vertices", nv, i);
    if (rec.size() != 2) throw ParseError(reader.line(), "vertex line needs 'x y'");
    m.vertices.push_back({detail::parse_double(rec[0], reader.line()), detail::parse_double(rec[1], reader.line())});
  }

  const Index nt = count("nt");
  m.triangles.reserve(nt);
  for (Index i = 0; i < nt; ++i) {
    auto rec = record("triangles", nt, i);
    if (rec.size() != 4) throw ParseError(reader.line(), "triangle line needs 'v0 v1 v2 region'");
    Triangle t;
    for (int k = 0; k < 3; ++k) {
      t.vertex_ids[k] = detail::parse_index(rec[k], reader.line());
      if (t.vertex_ids[k] >= nv)
        throw ParseError(reader.line(), "triangle " + std::to_string(i) + " references vertex " +
                                            std::to_string(t.vertex_ids[k]) + " of " + std::to_string(nv));
    }
    if (rec[3] == "0") t.region = Region::Background;
    else if (rec[3] == "1") t.region = Region::Inclusion;
    else throw ParseError(reader.line(), "triangle " + std::to_string(i) + ": region must be 0 or 1");
    m.triangles.push_back(t);
  }

  const Index ne = count("ne");
  m.boundary_edges.reserve(ne);
  for (Index i = 0; i < ne; ++i) {
    auto rec = record("edges", ne, i);
    if (rec.size() != 3) throw ParseError(reader.line(), "edge line needs 'v0 v1 marker'");
    BoundaryEdge e;
    for (int k = 0; k < 2; ++k) {
      e.vertex_ids[k] = detail::parse_index(rec[k], reader.line());
      if (e.vertex_ids[k] >= nv)
        throw ParseError(reader.line(), "edge " + std::to_string(i) + " references vertex " +
                                            std::to_string(e.vertex_ids[k]) + " of " + std::to_string(nv));
    }
    if (rec[2] == "outer") e.marker = EdgeMarker::Outer;
    else if (rec[2] == "interface") e.marker = EdgeMarker::Interface;
    else throw ParseError(reader.line(), "edge marker must be 'outer' or 'interface'");
    m.boundary_edges.push_back(e);
  }

  if (auto extra = reader.next_record())
    throw ParseError(reader.line(), "unexpected content after edge list (count mismatch?)");

  m.h = max_edge_length(m);
  return m;
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file " + path);
  return load_mesh(in);
}

void save_mesh(const Mesh& mesh, std::ostream& out) {
  out << "mesh2d 1\n";
  out << "nv " << mesh.vertices.size() << "\n";
  for (const auto& v : mesh.vertices) out << detail::format_double(v.x) << ' ' << detail::format_double(v.y) << '\n';
  out << "nt " << mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles)
    out << t.vertex_ids[0] << ' ' << t.vertex_ids[1] << ' ' << t.vertex_ids[2] << ' '
        << (t.region == Region::Inclusion ? 1 : 0) << '\n';
  out << "ne " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges)
    out << e.vertex_ids[0] << ' ' << e.vertex_ids[1] << ' '
        << (e.marker == EdgeMarker::Outer ? "outer" : "interface") << '\n';
}

void save_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file " + path);
  save_mesh(mesh, out);
  if (!out) throw Error("write failed: " + path);
}

SubMesh restrict_to(const Mesh& mesh, Region region) {
  SubMesh sub;
  std::vector<Index> to_local(mesh.vertices.size(), static_cast<Index>(-1));
  std::set<EdgeKey> kept_edges;
  for (const auto& tri : mesh.triangles) {
    if (tri.region != region) continue;
    Triangle local{{}, tri.region};
    for (int k = 0; k < 3; ++k) {
      const Index v = tri.vertex_ids[k];
      if (to_local[v] == static_cast<Index>(-1)) {
        to_local[v] = sub.to_parent.size();
        sub.to_parent.push_back(v);
        sub.mesh.vertices.push_back(mesh.vertices[v]);
      }
      local.vertex_ids[k] = to_local[v];
    }
    for (int k = 0; k < 3; ++k) kept_edges.insert(edge_key(tri.vertex_ids[k], tri.vertex_ids[(k + 1) % 3]));
    sub.mesh.triangles.push_back(local);
  }
  for (const auto& e : mesh.boundary_edges) {
    const bool wanted = e.marker == EdgeMarker::Interface || region == Region::Background;
    if (!wanted || !kept_edges.count(edge_key(e.vertex_ids[0], e.vertex_ids[1]))) continue;
    sub.mesh.boundary_edges.push_back({{to_local[e.vertex_ids[0]], to_local[e.vertex_ids[1]]}, e.marker});
  }
  sub.mesh.h = max_edge_length(sub.mesh);
  return sub;
}

}  // namespace hce
