#pragma once

// Vector P1 finite elements for isotropic linear elasticity on a tagged mesh.
//
// Stiffness integrands are elementwise constant and integrated exactly. Load
// vectors and L2 products use the 3-point vertex rule, so the L2 inner product
// is the lumped mass.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hce/linear_solver.hpp"
#include "hce/mesh.hpp"

namespace hce {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

using VectorField = std::function<Vec2(double x, double y)>;

struct LameParams {
  double mu_tilde = 0.0;
  double lambda_tilde = 0.0;
};

/// Young's-modulus-free Lame coefficients; throws MaterialError unless 0 < nu < 0.5.
LameParams lame_from_poisson(double nu);

/// Poisson ratio per region, bounded by nu_max < 0.5.
struct MaterialParams {
  double nu_background = 0.25;
  double nu_inclusion = 0.25;
  double nu_max = 0.45;

  double nu(Region r) const { return r == Region::Inclusion ? nu_inclusion : nu_background; }
  void validate() const;
};

/// Young's modulus: eta on the inclusion, 1 on the background.
class ContrastCoefficient {
 public:
  explicit ContrastCoefficient(double eta);
  double eta() const { return eta_; }
  double at(Region r) const { return r == Region::Inclusion ? eta_ : 1.0; }

 private:
  double eta_;
};

enum class RegionFilter { All, Background, Inclusion };

inline bool passes(RegionFilter f, Region r) {
  return f == RegionFilter::All || (f == RegionFilter::Background) == (r == Region::Background);
}

/// Two dofs per vertex: (2v, 2v+1) for the x and y components.
class FeSpace {
 public:
  explicit FeSpace(std::shared_ptr<const Mesh> mesh);
  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  Eigen::Index ndofs() const { return static_cast<Eigen::Index>(2 * mesh_->vertices.size()); }
  static Eigen::Index dof(Index vertex, int component) {
    return static_cast<Eigen::Index>(2 * vertex) + component;
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
};

using SpacePtr = std::shared_ptr<const FeSpace>;

SpacePtr make_space(std::shared_ptr<const Mesh> mesh);

class FeFunction {
 public:
  explicit FeFunction(SpacePtr space);  // zero field
  FeFunction(SpacePtr space, Vector coefficients);

  const FeSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const Vector& coefficients() const { return coeffs_; }
  Vector& coefficients() { return coeffs_; }
  Vec2 at_vertex(Index v) const {
    return {coeffs_[FeSpace::dof(v, 0)], coeffs_[FeSpace::dof(v, 1)]};
  }

  FeFunction& operator+=(const FeFunction& other);
  FeFunction& operator-=(const FeFunction& other);
  FeFunction& operator*=(double s);
  friend FeFunction operator+(FeFunction a, const FeFunction& b) { return a += b; }
  friend FeFunction operator-(FeFunction a, const FeFunction& b) { return a -= b; }
  friend FeFunction operator*(double s, FeFunction a) { return a *= s; }

 private:
  SpacePtr space_;
  Vector coeffs_;
};

/// Nodal interpolant of an analytic field.
FeFunction interpolate(const SpacePtr& space, const VectorField& field);

using ElementMatrix = Eigen::Matrix<double, 6, 6>;

/// Exact P1 stiffness of one triangle, dofs ordered (u0x, u0y, u1x, u1y, u2x, u2y).
ElementMatrix element_stiffness(const std::array<Vertex, 3>& corners, const LameParams& lame);

/// Stiffness of the filtered triangles, each scaled by E(x) when `weight` is set.
SparseMatrix assemble_stiffness(const FeSpace& space, RegionFilter filter, const MaterialParams& material,
                                std::optional<ContrastCoefficient> weight = std::nullopt);

/// Vertex-rule load vector of the filtered triangles.
Vector assemble_load(const FeSpace& space, const VectorField& f, RegionFilter filter);

/// Per-dof weights of the lumped (vertex-rule) L2 inner product.
Vector lumped_mass(const FeSpace& space, RegionFilter filter = RegionFilter::All);

/// Result of eliminating constrained rows and columns.
struct ReducedSystem {
  SparseMatrix matrix;             // free x free block
  Vector rhs;                      // b_f - A_fc * values
  std::vector<Eigen::Index> free_dofs;
  std::vector<Eigen::Index> constrained_dofs;
  Vector constrained_values;
  Eigen::Index full_size = 0;

  /// Full vector with the free solution and the constraint values reinserted.
  Vector expand(const Vector& free_solution) const;
};

ReducedSystem apply_dirichlet(const SparseMatrix& a, const Vector& b,
                              const std::vector<Eigen::Index>& boundary_dofs, const Vector& values);

/// Factorized Dirichlet problem for a fixed matrix and constrained dof set;
/// solve() takes the full rhs and the constrained values.
class DirichletSolver {
 public:
  DirichletSolver(const SparseMatrix& a, const std::vector<Eigen::Index>& constrained_dofs);
  Vector solve(const Vector& b, const Vector& values) const;
  const std::vector<Eigen::Index>& free_dofs() const { return free_; }
  const std::vector<Eigen::Index>& constrained_dofs() const { return constrained_; }
  const SpdSolver& factorization() const { return *solver_; }

 private:
  SparseMatrix a_;
  std::vector<Eigen::Index> free_;
  std::vector<Eigen::Index> constrained_;
  SparseMatrix a_fc_;
  std::shared_ptr<SpdSolver> solver_;
};

/// Restriction of a sparse matrix to rows `rows` and columns `cols`.
SparseMatrix extract_block(const SparseMatrix& a, const std::vector<Eigen::Index>& rows,
                           const std::vector<Eigen::Index>& cols);

double l2_norm(const FeFunction& u, RegionFilter filter = RegionFilter::All);
double h1_seminorm(const FeFunction& u, RegionFilter filter = RegionFilter::All);
double h1_norm(const FeFunction& u, RegionFilter filter = RegionFilter::All);
double h1_seminorm_region(const FeFunction& u, Region region);
/// Lumped L2 inner product over the filtered triangles.
double l2_inner(const FeFunction& a, const FeFunction& b, RegionFilter filter = RegionFilter::All);

/// Bilinear form value u^T A v.
inline double energy(const SparseMatrix& a, const Vector& u, const Vector& v) { return u.dot(a * v); }

}  // namespace hce
