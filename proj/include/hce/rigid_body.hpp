#pragma once

// Rigid-body motions of the inclusion and the floating (pure Neumann)
// inclusion problems they make singular.

#include <array>
#include <memory>

#include "hce/fem.hpp"

namespace hce {

inline constexpr int kRigidModes = 3;  // 2D: two translations and one rotation
using ModeCoefficients = std::array<double, kRigidModes>;

/// (a1, a2) + b (y - cy, -(x - cx)).
VectorField rigid_motion(double a1, double a2, double b, Vertex center = {0.0, 0.0});

/// L2-orthonormal basis of the rigid motions on a (sub)mesh. The rotation is
/// centered at the area centroid before Gram-Schmidt.
struct RigidBodyBasis {
  SpacePtr space;
  std::array<Vector, kRigidModes> modes;
  Vertex centroid;
  Eigen::Matrix3d gram;  // lumped L2 Gram matrix of `modes`
  Vector mass;           // lumped mass diagonal of `space`

  FeFunction mode(int l) const { return FeFunction(space, modes[static_cast<std::size_t>(l)]); }
};

RigidBodyBasis rb_basis(const SpacePtr& inclusion_space);

struct RbProjection {
  ModeCoefficients coefficients{};
  FeFunction remainder;
};

/// u = remainder + sum_l c_l xi_l with the remainder L2-orthogonal to every mode.
RbProjection rb_project(const FeFunction& u, const RigidBodyBasis& basis);

/// r_l = rhs . xi_l (dual pairing of a load vector with each mode).
ModeCoefficients check_compatibility(const Vector& rhs, const RigidBodyBasis& basis);

struct NeumannSolution {
  FeFunction u;
  ModeCoefficients compatibility{};  // raw residuals rhs . xi_l
  double relative_compatibility = 0.0;  // max_l |r_l| / ||rhs||
  double projected_residual = 0.0;      // ||rhs - A u - B^T lambda|| / ||rhs||
  double orthogonality = 0.0;           // max_l |(u, xi_l)| / ||u||
};

/// Saddle-point solver [A, B^T; B, 0] with B the L2 pairings against the
/// modes; factorized once, reused for every right-hand side.
class NeumannSolver {
 public:
  NeumannSolver(const SparseMatrix& a, const RigidBodyBasis& basis);

  /// Throws CompatibilityError when max_l |rhs . xi_l| > tol * ||rhs||.
  NeumannSolution solve(const Vector& rhs, double tol) const;

  const SparseMatrix& matrix() const { return a_; }

 private:
  SparseMatrix a_;
  RigidBodyBasis basis_;
  std::shared_ptr<LuSolver> lu_;
};

NeumannSolution solve_neumann_rb(const SparseMatrix& a, const Vector& rhs, const RigidBodyBasis& basis,
                                 double tol = 1e-10);

}  // namespace hce
