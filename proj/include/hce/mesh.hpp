#pragma once

// Conforming triangulations of a rectangle with one interior rectangular
// inclusion resolved exactly by element edges.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace hce {

using Index = std::size_t;

struct Vertex {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vertex&, const Vertex&) = default;
};

enum class Region { Background = 0, Inclusion = 1 };

enum class EdgeMarker { Outer, Interface };

struct Triangle {
  std::array<Index, 3> vertex_ids{};
  Region region = Region::Background;
  friend bool operator==(const Triangle&, const Triangle&) = default;
};

struct BoundaryEdge {
  std::array<Index, 2> vertex_ids{};
  EdgeMarker marker = EdgeMarker::Outer;
  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

struct Mesh {
  std::vector<Vertex> vertices;
  std::vector<Triangle> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double h = 0.0;  // max edge length, informational only

  std::array<Vertex, 3> corners(Index t) const {
    const auto& ids = triangles[t].vertex_ids;
    return {vertices[ids[0]], vertices[ids[1]], vertices[ids[2]]};
  }

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

/// Twice the signed area; positive for counterclockwise vertex order.
double signed_area2(const Vertex& a, const Vertex& b, const Vertex& c);
double triangle_area(const Mesh& mesh, Index t);
double max_edge_length(const Mesh& mesh);

/// Structured mesh with `n` subdivisions per unit length. Every grid cell
/// [i, i+1] x [j, j+1] is split along its (i, j) -> (i+1, j+1) diagonal into
/// (v00, v10, v11) and (v00, v11, v01). Inclusion corners must lie on grid
/// lines and strictly inside the outer rectangle.
Mesh generate_rect_with_inclusion(const Rect& outer, const Rect& inclusion, int n);

struct ValidationIssue {
  std::string kind;   // short machine-friendly tag, e.g. "orientation"
  std::string what;   // entity kind: "vertex", "triangle", "edge", "mesh"
  Index index = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  bool mentions(const std::string& what, Index index) const;
  std::string summary() const;
};

ValidationReport validate(const Mesh& mesh);

Mesh load_mesh(std::istream& in);
Mesh load_mesh_file(const std::string& path);
void save_mesh(const Mesh& mesh, std::ostream& out);
void save_mesh_file(const Mesh& mesh, const std::string& path);

struct SubMesh {
  Mesh mesh;
  std::vector<Index> to_parent;  // submesh vertex id -> parent vertex id
};

/// Triangles of one region with compacted vertex numbering. Inclusion keeps
/// the Interface edges; Background keeps Outer and Interface edges.
SubMesh restrict_to(const Mesh& mesh, Region region);

}  // namespace hce
