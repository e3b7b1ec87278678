#pragma once

// Flat key = value study configuration, dotted keys, '#' comments:
//
//   geometry.outer     = 0, 0, 1, 1
//   geometry.inclusion = 0.25, 0.25, 0.75, 0.75
//   geometry.n         = 16
//   geometry.mesh_file = path          (optional, replaces the generator)
//   material.nu_background / material.nu_inclusion / material.nu_max
//   load.kind = gravity       load.params = 1
//   boundary.kind = zero      boundary.params =
//   study.eta  = 1e2, 1e3, 1e4
//   study.jmax = 4
//   tolerances.solver = 1e-12     tolerances.compatibility = 1e-10
//   output.dir = out
//
// Field kinds (params in order, missing trailing params are 0):
//   zero
//   constant           a, b              -> (a, b)
//   gravity            g (default 1)     -> (0, -g)
//   rigid_translation  a1, a2            -> (a1, a2)
//   rigid_rotation     b, cx, cy         -> b (y - cy, -(x - cx))
//   poly_xy            p0..p3, q0..q3    -> (p0 + p1 x + p2 y + p3 xy, q0 + q1 x + q2 y + q3 xy)

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hce/expansion.hpp"

namespace hce {

struct FieldSpec {
  std::string kind = "zero";
  std::vector<double> params;
};

struct StudyConfig {
  Rect outer{0.0, 0.0, 1.0, 1.0};
  Rect inclusion{0.25, 0.25, 0.75, 0.75};
  int n = 16;
  std::optional<std::string> mesh_file;
  MaterialParams material;
  FieldSpec load{"gravity", {1.0}};
  FieldSpec boundary{"zero", {}};
  std::vector<double> etas{1e2, 1e3, 1e4};
  int jmax = 4;
  double solver_tol = 1e-12;
  double compatibility_tol = 1e-10;
  std::string output_dir = "out";

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Throws ConfigError (unknown key, bad value) or ParseError (malformed line).
StudyConfig parse_config(std::istream& in);
StudyConfig load_config_file(const std::string& path);

/// Throws ConfigError with `key` for unknown kinds or too many params.
VectorField make_field(const FieldSpec& spec, const std::string& key = "field");

/// Mesh from the generator or the mesh file, plus material and fields.
ProblemData build_problem(const StudyConfig& config);

}  // namespace hce
