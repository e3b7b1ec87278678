#include <doctest.h>

#include <random>

#include "hce/errors.hpp"
#include "hce/rigid_body.hpp"

using namespace hce;

namespace {

struct InclusionFixture {
  SubMesh sub;
  SpacePtr space;
  RigidBodyBasis basis;
  SparseMatrix a1;
  Vector mass;

  explicit InclusionFixture(const Rect& inclusion = {0.25, 0.25, 0.75, 0.75}, int n = 8) {
    const Mesh m = generate_rect_with_inclusion({0, 0, 1, 1}, inclusion, n);
    sub = restrict_to(m, Region::Inclusion);
    space = make_space(std::make_shared<const Mesh>(sub.mesh));
    basis = rb_basis(space);
    a1 = assemble_stiffness(*space, RegionFilter::All, MaterialParams{});
    mass = lumped_mass(*space);
  }

  Vector random_orthogonal(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1, 1);
    Vector w(space->ndofs());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = d(rng);
    return rb_project(FeFunction(space, w), basis).remainder.coefficients();
  }
};

double l2(const Vector& mass, const Vector& a, const Vector& b) { return (mass.array() * a.array() * b.array()).sum(); }

}  // namespace

TEST_CASE("rigid basis is orthonormal, strain free and centered") {
  const InclusionFixture f;
  CHECK(f.basis.centroid.x == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(f.basis.centroid.y == doctest::Approx(0.5).epsilon(1e-14));
  CHECK((f.basis.gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
  for (int l = 0; l < kRigidModes; ++l) {
    const Vector& xi = f.basis.modes[static_cast<std::size_t>(l)];
    CHECK(std::abs(energy(f.a1, xi, xi)) <= 1e-12);
    for (int m = 0; m < kRigidModes; ++m)
      CHECK(l2(f.mass, xi, f.basis.modes[static_cast<std::size_t>(m)]) == doctest::Approx(l == m ? 1.0 : 0.0).epsilon(1e-12));
  }
  // Span check: any rigid motion is reproduced exactly by its projection.
  const FeFunction rm = interpolate(f.space, rigid_motion(1.5, -0.5, 2.0, {0.1, 0.9}));
  const RbProjection p = rb_project(rm, f.basis);
  CHECK(p.remainder.coefficients().cwiseAbs().maxCoeff() <= 1e-13);

  const InclusionFixture off({0.25, 0.5, 0.5, 0.75});
  CHECK(off.basis.centroid.x == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(off.basis.centroid.y == doctest::Approx(0.625).epsilon(1e-14));
}

TEST_CASE("rigid projection") {
  const InclusionFixture f;
  const RbProjection p = rb_project(f.basis.mode(1), f.basis);
  CHECK(p.coefficients[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.coefficients[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.coefficients[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.remainder.coefficients().cwiseAbs().maxCoeff() <= 1e-12);

  const Vector w = f.random_orthogonal(1);
  const RbProjection q = rb_project(FeFunction(f.space, w), f.basis);
  for (double c : q.coefficients) CHECK(std::abs(c) <= 1e-12);
  CHECK((q.remainder.coefficients() - w).cwiseAbs().maxCoeff() <= 1e-13);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-1, 1);
  Vector u(f.space->ndofs());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = d(rng);
  const RbProjection r = rb_project(FeFunction(f.space, u), f.basis);
  Vector rebuilt = r.remainder.coefficients();
  for (int l = 0; l < kRigidModes; ++l) rebuilt += r.coefficients[static_cast<std::size_t>(l)] * f.basis.modes[static_cast<std::size_t>(l)];
  CHECK((rebuilt - u).cwiseAbs().maxCoeff() <= 1e-14);
  const double un = std::sqrt(l2(f.mass, u, u));
  for (int l = 0; l < kRigidModes; ++l)
    CHECK(std::abs(l2(f.mass, r.remainder.coefficients(), f.basis.modes[static_cast<std::size_t>(l)])) <= 1e-11 * un);
  const RbProjection again = rb_project(r.remainder, f.basis);
  for (double c : again.coefficients) CHECK(std::abs(c) <= 1e-11);
}

TEST_CASE("floating Neumann solves") {
  const InclusionFixture f;
  SUBCASE("zero rhs") {
    const NeumannSolution s = solve_neumann_rb(f.a1, Vector::Zero(f.space->ndofs()), f.basis);
    CHECK(s.u.coefficients().isZero(0.0));
  }
  SUBCASE("consistent rhs returns the orthogonal preimage") {
    const Vector w = f.random_orthogonal(7);
    const Vector rhs = f.a1 * w;
    const NeumannSolution s = solve_neumann_rb(f.a1, rhs, f.basis);
    CHECK((s.u.coefficients() - w).norm() <= 1e-11 * w.norm());
    CHECK(s.projected_residual <= 1e-11);
    CHECK(s.orthogonality <= 1e-11);
    CHECK(s.relative_compatibility <= 1e-12);
  }
  SUBCASE("mass-weighted mode is incompatible") {
    const Vector rhs = f.mass.cwiseProduct(f.basis.modes[0]);
    try {
      (void)solve_neumann_rb(f.a1, rhs, f.basis);
      FAIL("expected CompatibilityError");
    } catch (const CompatibilityError& e) {
      // rhs . xi_0 = ||xi_0||^2_{L2} = 1.
      CHECK(e.residuals()[0] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(e.residuals()[1]) <= 1e-12);
      CHECK(std::abs(e.residuals()[2]) <= 1e-12);
    }
    const ModeCoefficients r = check_compatibility(rhs, f.basis);
    CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("solver is reusable") {
    const NeumannSolver solver(f.a1, f.basis);
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      const Vector w = f.random_orthogonal(seed);
      const NeumannSolution s = solver.solve(f.a1 * w, 1e-10);
      CHECK((s.u.coefficients() - w).norm() <= 1e-11 * w.norm());
    }
  }
}

TEST_CASE("rigid basis needs area") {
  const SpacePtr empty = make_space(std::make_shared<const Mesh>(Mesh{{{0, 0}, {1, 0}, {0, 1}}, {}, {}, 0.0}));
  CHECK_THROWS_AS(rb_basis(empty), GeometryError);
}
