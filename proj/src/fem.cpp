#include "hce/fem.hpp"

#include <algorithm>
#include <cmath>

#include "hce/errors.hpp"

namespace hce {

namespace {

// Gradients of the three barycentric basis functions and the triangle area.
struct P1Gradients {
  std::array<double, 3> dx{};
  std::array<double, 3> dy{};
  double area = 0.0;
};

P1Gradients p1_gradients(const std::array<Vertex, 3>& p) {
  const double a2 = signed_area2(p[0], p[1], p[2]);
  if (!(a2 > 0.0)) throw AssemblyError("degenerate or clockwise triangle (signed area " + std::to_string(0.5 * a2) + ")");
  P1Gradients g;
  for (int i = 0; i < 3; ++i) {
    const Vertex& pj = p[(i + 1) % 3];
    const Vertex& pk = p[(i + 2) % 3];
    g.dx[i] = (pj.y - pk.y) / a2;
    g.dy[i] = (pk.x - pj.x) / a2;
  }
  g.area = 0.5 * a2;
  return g;
}

}  // namespace

LameParams lame_from_poisson(double nu) {
  if (!(nu > 0.0 && nu < 0.5)) throw MaterialError("Poisson ratio must lie in (0, 0.5), got " + std::to_string(nu));
  return {1.0 / (2.0 * (1.0 + nu)), nu / (2.0 * (1.0 + nu) * (1.0 - 2.0 * nu))};
}

void MaterialParams::validate() const {
  if (!(nu_max > 0.0 && nu_max < 0.5)) throw MaterialError("nu_max must lie in (0, 0.5)");
  for (double nu : {nu_background, nu_inclusion}) {
    if (!(nu > 0.0 && nu <= nu_max))
      throw MaterialError("Poisson ratio " + std::to_string(nu) + " outside (0, nu_max]");
  }
}

ContrastCoefficient::ContrastCoefficient(double eta) : eta_(eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw UsageError("contrast eta must be positive and finite");
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  if (!mesh_) throw UsageError("FeSpace needs a mesh");
}

SpacePtr make_space(std::shared_ptr<const Mesh> mesh) { return std::make_shared<const FeSpace>(std::move(mesh)); }

FeFunction::FeFunction(SpacePtr space) : space_(std::move(space)) {
  if (!space_) throw UsageError("FeFunction needs a space");
  coeffs_ = Vector::Zero(space_->ndofs());
}

FeFunction::FeFunction(SpacePtr space, Vector coefficients) : space_(std::move(space)), coeffs_(std::move(coefficients)) {
  if (!space_) throw UsageError("FeFunction needs a space");
  if (coeffs_.size() != space_->ndofs())
    throw UsageError("coefficient count " + std::to_string(coeffs_.size()) + " does not match " +
                     std::to_string(space_->ndofs()) + " dofs");
  if (!coeffs_.allFinite()) throw UsageError("FeFunction coefficients must be finite");
}

FeFunction& FeFunction::operator+=(const FeFunction& other) {
  if (other.coeffs_.size() != coeffs_.size())
    throw UsageError("adding fields on different spaces");
  coeffs_ += other.coeffs_;
  return *this;
}

FeFunction& FeFunction::operator-=(const FeFunction& other) {
  if (other.coeffs_.size() != coeffs_.size())
    throw UsageError("subtracting fields on different spaces");
  coeffs_ -= other.coeffs_;
  return *this;
}

FeFunction& FeFunction::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

FeFunction interpolate(const SpacePtr& space, const VectorField& field) {
  FeFunction u(space);
  const auto& verts = space->mesh().vertices;
  for (Index v = 0; v < verts.size(); ++v) {
    const Vec2 val = field(verts[v].x, verts[v].y);
    u.coefficients()[FeSpace::dof(v, 0)] = val.x;
    u.coefficients()[FeSpace::dof(v, 1)] = val.y;
  }
  return u;
}

ElementMatrix element_stiffness(const std::array<Vertex, 3>& corners, const LameParams& lame) {
  const P1Gradients g = p1_gradients(corners);
  // Rows: eps_xx, eps_yy, engineering shear gamma_xy.
  Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    b(0, 2 * i) = g.dx[i];
    b(1, 2 * i + 1) = g.dy[i];
    b(2, 2 * i) = g.dy[i];
    b(2, 2 * i + 1) = g.dx[i];
  }
  const double mu = lame.mu_tilde;
  const double lam = lame.lambda_tilde;
  Eigen::Matrix3d d;
  d << 2 * mu + lam, lam, 0, lam, 2 * mu + lam, 0, 0, 0, mu;
  return g.area * b.transpose() * d * b;
}

SparseMatrix assemble_stiffness(const FeSpace& space, RegionFilter filter, const MaterialParams& material,
                                std::optional<ContrastCoefficient> weight) {
  material.validate();
  const Mesh& mesh = space.mesh();
  const LameParams lame_bg = lame_from_poisson(material.nu_background);
  const LameParams lame_inc = lame_from_poisson(material.nu_inclusion);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(36 * mesh.triangles.size());
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    if (!passes(filter, tri.region)) continue;
    ElementMatrix k = element_stiffness(mesh.corners(t), tri.region == Region::Inclusion ? lame_inc : lame_bg);
    if (weight) k *= weight->at(tri.region);
    for (int a = 0; a < 6; ++a) {
      const auto ga = FeSpace::dof(tri.vertex_ids[a / 2], a % 2);
      for (int b = 0; b < 6; ++b) triplets.emplace_back(ga, FeSpace::dof(tri.vertex_ids[b / 2], b % 2), k(a, b));
    }
  }
  SparseMatrix a(space.ndofs(), space.ndofs());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Vector assemble_load(const FeSpace& space, const VectorField& f, RegionFilter filter) {
  const Mesh& mesh = space.mesh();
  Vector b = Vector::Zero(space.ndofs());
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    if (!passes(filter, tri.region)) continue;
    const double w = triangle_area(mesh, t) / 3.0;
    for (Index v : tri.vertex_ids) {
      const Vec2 val = f(mesh.vertices[v].x, mesh.vertices[v].y);
      b[FeSpace::dof(v, 0)] += w * val.x;
      b[FeSpace::dof(v, 1)] += w * val.y;
    }
  }
  return b;
}

Vector lumped_mass(const FeSpace& space, RegionFilter filter) {
  const Mesh& mesh = space.mesh();
  Vector m = Vector::Zero(space.ndofs());
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    if (!passes(filter, tri.region)) continue;
    const double w = triangle_area(mesh, t) / 3.0;
    for (Index v : tri.vertex_ids) {
      m[FeSpace::dof(v, 0)] += w;
      m[FeSpace::dof(v, 1)] += w;
    }
  }
  return m;
}

Vector ReducedSystem::expand(const Vector& free_solution) const {
  if (free_solution.size() != static_cast<Eigen::Index>(free_dofs.size()))
    throw SolveError("reduced solution has the wrong size");
  Vector full = Vector::Zero(full_size);
  for (std::size_t i = 0; i < free_dofs.size(); ++i) full[free_dofs[i]] = free_solution[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < constrained_dofs.size(); ++i)
    full[constrained_dofs[i]] = constrained_values[static_cast<Eigen::Index>(i)];
  return full;
}

SparseMatrix extract_block(const SparseMatrix& a, const std::vector<Eigen::Index>& rows,
                           const std::vector<Eigen::Index>& cols) {
  std::vector<Eigen::Index> row_pos(static_cast<std::size_t>(a.rows()), -1);
  std::vector<Eigen::Index> col_pos(static_cast<std::size_t>(a.cols()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) row_pos[static_cast<std::size_t>(rows[i])] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) col_pos[static_cast<std::size_t>(cols[i])] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      const auto r = row_pos[static_cast<std::size_t>(it.row())];
      const auto c = col_pos[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

namespace {

std::vector<Eigen::Index> complement(Eigen::Index n, const std::vector<Eigen::Index>& constrained) {
  std::vector<bool> is_c(static_cast<std::size_t>(n), false);
  for (auto d : constrained) {
    if (d < 0 || d >= n) throw SolveError("constrained dof " + std::to_string(d) + " out of range");
    is_c[static_cast<std::size_t>(d)] = true;
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index d = 0; d < n; ++d)
    if (!is_c[static_cast<std::size_t>(d)]) free.push_back(d);
  if (free.empty()) throw SolveError("no free degrees of freedom remain after applying constraints");
  return free;
}

}  // namespace

ReducedSystem apply_dirichlet(const SparseMatrix& a, const Vector& b, const std::vector<Eigen::Index>& boundary_dofs,
                              const Vector& values) {
  if (values.size() != static_cast<Eigen::Index>(boundary_dofs.size()))
    throw SolveError("one constraint value per boundary dof required");
  if (b.size() != a.rows()) throw SolveError("rhs size mismatch");
  ReducedSystem sys;
  sys.full_size = a.rows();
  sys.constrained_dofs = boundary_dofs;
  sys.constrained_values = values;
  sys.free_dofs = complement(a.rows(), boundary_dofs);
  sys.matrix = extract_block(a, sys.free_dofs, sys.free_dofs);
  const SparseMatrix a_fc = extract_block(a, sys.free_dofs, boundary_dofs);
  Vector bf(static_cast<Eigen::Index>(sys.free_dofs.size()));
  for (std::size_t i = 0; i < sys.free_dofs.size(); ++i) bf[static_cast<Eigen::Index>(i)] = b[sys.free_dofs[i]];
  sys.rhs = bf - a_fc * values;
  return sys;
}

DirichletSolver::DirichletSolver(const SparseMatrix& a, const std::vector<Eigen::Index>& constrained_dofs)
    : a_(a), constrained_(constrained_dofs) {
  free_ = complement(a.rows(), constrained_);
  a_fc_ = extract_block(a, free_, constrained_);
  solver_ = std::make_shared<SpdSolver>(extract_block(a, free_, free_));
}

Vector DirichletSolver::solve(const Vector& b, const Vector& values) const {
  if (b.size() != a_.rows()) throw SolveError("rhs size mismatch");
  if (values.size() != static_cast<Eigen::Index>(constrained_.size()))
    throw SolveError("one constraint value per constrained dof required");
  Vector bf(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t i = 0; i < free_.size(); ++i) bf[static_cast<Eigen::Index>(i)] = b[free_[i]];
  const Vector xf = solver_->solve(bf - a_fc_ * values);
  Vector full(a_.rows());
  for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = xf[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < constrained_.size(); ++i) full[constrained_[i]] = values[static_cast<Eigen::Index>(i)];
  return full;
}

double l2_inner(const FeFunction& a, const FeFunction& b, RegionFilter filter) {
  const Vector m = lumped_mass(a.space(), filter);
  return (m.array() * a.coefficients().array() * b.coefficients().array()).sum();
}

double l2_norm(const FeFunction& u, RegionFilter filter) { return std::sqrt(l2_inner(u, u, filter)); }

double h1_seminorm(const FeFunction& u, RegionFilter filter) {
  const Mesh& mesh = u.space().mesh();
  const Vector& c = u.coefficients();
  double sum = 0.0;
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    if (!passes(filter, tri.region)) continue;
    const P1Gradients g = p1_gradients(mesh.corners(t));
    for (int comp = 0; comp < 2; ++comp) {
      double gx = 0.0;
      double gy = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double ui = c[FeSpace::dof(tri.vertex_ids[i], comp)];
        gx += ui * g.dx[i];
        gy += ui * g.dy[i];
      }
      sum += g.area * (gx * gx + gy * gy);
    }
  }
  return std::sqrt(sum);
}

double h1_norm(const FeFunction& u, RegionFilter filter) {
  const double l2 = l2_norm(u, filter);
  const double semi = h1_seminorm(u, filter);
  return std::sqrt(l2 * l2 + semi * semi);
}

double h1_seminorm_region(const FeFunction& u, Region region) {
  return h1_seminorm(u, region == Region::Inclusion ? RegionFilter::Inclusion : RegionFilter::Background);
}

}  // namespace hce
