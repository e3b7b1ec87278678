#include "hce/rigid_body.hpp"

#include <cmath>
#include <sstream>

#include "hce/errors.hpp"

namespace hce {

VectorField rigid_motion(double a1, double a2, double b, Vertex center) {
  return [=](double x, double y) { return Vec2{a1 + b * (y - center.y), a2 - b * (x - center.x)}; };
}

RigidBodyBasis rb_basis(const SpacePtr& inclusion_space) {
  const Mesh& mesh = inclusion_space->mesh();
  double area = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const double a = triangle_area(mesh, t);
    const auto p = mesh.corners(t);
    area += a;
    cx += a * (p[0].x + p[1].x + p[2].x) / 3.0;
    cy += a * (p[0].y + p[1].y + p[2].y) / 3.0;
  }
  if (!(area > 0.0)) throw GeometryError("rigid-body basis needs a submesh with positive area");

  RigidBodyBasis basis;
  basis.space = inclusion_space;
  basis.centroid = {cx / area, cy / area};
  basis.mass = lumped_mass(*inclusion_space);

  const std::array<VectorField, kRigidModes> raw = {rigid_motion(1, 0, 0), rigid_motion(0, 1, 0),
                                                    rigid_motion(0, 0, 1, basis.centroid)};
  const auto inner = [&](const Vector& a, const Vector& b) { return (basis.mass.array() * a.array() * b.array()).sum(); };
  // Modified Gram-Schmidt, applied twice for round-off.
  for (int l = 0; l < kRigidModes; ++l) {
    Vector v = interpolate(inclusion_space, raw[static_cast<std::size_t>(l)]).coefficients();
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < l; ++k) v -= inner(v, basis.modes[static_cast<std::size_t>(k)]) * basis.modes[static_cast<std::size_t>(k)];
    basis.modes[static_cast<std::size_t>(l)] = v / std::sqrt(inner(v, v));
  }
  for (int l = 0; l < kRigidModes; ++l)
    for (int m = 0; m < kRigidModes; ++m)
      basis.gram(l, m) = inner(basis.modes[static_cast<std::size_t>(l)], basis.modes[static_cast<std::size_t>(m)]);
  return basis;
}

RbProjection rb_project(const FeFunction& u, const RigidBodyBasis& basis) {
  if (u.coefficients().size() != basis.space->ndofs()) throw UsageError("field is not on the inclusion space");
  Eigen::Vector3d rhs;
  for (int l = 0; l < kRigidModes; ++l)
    rhs[l] = (basis.mass.array() * u.coefficients().array() * basis.modes[static_cast<std::size_t>(l)].array()).sum();
  const Eigen::Vector3d c = basis.gram.ldlt().solve(rhs);
  Vector rem = u.coefficients();
  for (int l = 0; l < kRigidModes; ++l) rem -= c[l] * basis.modes[static_cast<std::size_t>(l)];
  return {{c[0], c[1], c[2]}, FeFunction(basis.space, std::move(rem))};
}

ModeCoefficients check_compatibility(const Vector& rhs, const RigidBodyBasis& basis) {
  ModeCoefficients r{};
  for (int l = 0; l < kRigidModes; ++l) r[static_cast<std::size_t>(l)] = rhs.dot(basis.modes[static_cast<std::size_t>(l)]);
  return r;
}

NeumannSolver::NeumannSolver(const SparseMatrix& a, const RigidBodyBasis& basis) : a_(a), basis_(basis) {
  const Eigen::Index n = a.rows();
  if (n != basis.space->ndofs()) throw UsageError("Neumann matrix does not match the basis space");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(a.nonZeros() + 6 * n));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int l = 0; l < kRigidModes; ++l) {
    const Vector b = basis.mass.cwiseProduct(basis.modes[static_cast<std::size_t>(l)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (b[i] == 0.0) continue;
      trip.emplace_back(n + l, i, b[i]);
      trip.emplace_back(i, n + l, b[i]);
    }
  }
  SparseMatrix aug(n + kRigidModes, n + kRigidModes);
  aug.setFromTriplets(trip.begin(), trip.end());
  lu_ = std::make_shared<LuSolver>(aug);
}

NeumannSolution NeumannSolver::solve(const Vector& rhs, double tol) const {
  const RigidBodyBasis& basis = basis_;
  const Eigen::Index n = a_.rows();
  if (rhs.size() != n) throw UsageError("Neumann rhs size mismatch");

  NeumannSolution sol{FeFunction(basis.space)};
  sol.compatibility = check_compatibility(rhs, basis);
  const double rnorm = rhs.norm();
  double worst = 0.0;
  for (double r : sol.compatibility) worst = std::max(worst, std::abs(r));
  sol.relative_compatibility = rnorm > 0.0 ? worst / rnorm : 0.0;
  if (worst > tol * rnorm) {
    std::ostringstream os;
    os.precision(3);
    os << "Neumann rhs incompatible with rigid modes: residuals (" << sol.compatibility[0] << ", "
       << sol.compatibility[1] << ", " << sol.compatibility[2] << ") vs tol " << tol << " * ||rhs|| " << rnorm;
    throw CompatibilityError(os.str(), sol.compatibility);
  }
  if (rnorm == 0.0) return sol;

  Vector ext = Vector::Zero(n + kRigidModes);
  ext.head(n) = rhs;
  const Vector x = lu_->solve(ext);
  if (!x.allFinite()) throw SolveError("augmented Neumann system produced non-finite values");
  sol.u = FeFunction(basis.space, x.head(n));

  Vector r = rhs - a_ * sol.u.coefficients();
  for (int l = 0; l < kRigidModes; ++l)
    r -= x[n + l] * basis.mass.cwiseProduct(basis.modes[static_cast<std::size_t>(l)]);
  sol.projected_residual = r.norm() / rnorm;

  const double unorm = std::sqrt((basis.mass.array() * sol.u.coefficients().array().square()).sum());
  double orth = 0.0;
  for (int l = 0; l < kRigidModes; ++l)
    orth = std::max(orth, std::abs((basis.mass.array() * sol.u.coefficients().array() *
                                    basis.modes[static_cast<std::size_t>(l)].array()).sum()));
  sol.orthogonality = unorm > 0.0 ? orth / unorm : 0.0;
  return sol;
}

NeumannSolution solve_neumann_rb(const SparseMatrix& a, const Vector& rhs, const RigidBodyBasis& basis, double tol) {
  return NeumannSolver(a, basis).solve(rhs, tol);
}

}  // namespace hce
