#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "hce/errors.hpp"
#include "hce/field_io.hpp"

using namespace hce;
using fixtures::max_abs;

namespace {

// Background stiffness rebuilt element by element, bypassing the assembler.
double background_energy_by_elements(const Discretization& d, const Vector& u) {
  const Mesh& m = d.mesh();
  double e = 0.0;
  for (Index t = 0; t < m.triangles.size(); ++t) {
    if (m.triangles[t].region != Region::Background) continue;
    const ElementMatrix k = element_stiffness(m.corners(t), lame_from_poisson(d.data().material.nu_background));
    Eigen::Matrix<double, 6, 1> ue;
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 2; ++c) ue[2 * a + c] = u[FeSpace::dof(m.triangles[t].vertex_ids[a], c)];
    e += ue.dot(k * ue);
  }
  return e;
}

FeFunction random_harmonic(const Discretization& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1, 1);
  Vector inc(static_cast<Eigen::Index>(d.inclusion_dofs().size()));
  for (Eigen::Index i = 0; i < inc.size(); ++i) inc[i] = dist(rng);
  return FeFunction(d.space(), d.extend(inc, Vector::Zero(static_cast<Eigen::Index>(d.outer_dofs().size())),
                                        Vector::Zero(d.space()->ndofs())));
}

}  // namespace

TEST_CASE("dof classes partition the space") {
  const auto d = fixtures::default_disc(8);
  CHECK(d->outer_dofs().size() == 2 * 32);
  CHECK(d->inclusion_dofs().size() == 2 * 25);
  CHECK(d->interface_vertices().size() == 16);
  CHECK(d->interior_background_dofs().size() == 162 - 64 - 50);
  // n = 4 leaves no background dof free.
  CHECK_THROWS_AS(fixtures::default_disc(4), SolveError);
}

TEST_CASE("u00") {
  SUBCASE("zero data") {
    const auto d = make_discretization(fixtures::problem(8, fixtures::zero(), fixtures::zero()));
    CHECK(compute_u00(*d).coefficients().isZero(0.0));
  }
  SUBCASE("constraints and equilibrium") {
    const auto d = fixtures::generic_disc();
    const FeFunction u00 = compute_u00(*d);
    for (auto k : d->inclusion_dofs()) CHECK(u00.coefficients()[k] == 0.0);
    const Vector g = d->boundary_values();
    for (std::size_t i = 0; i < d->outer_dofs().size(); ++i)
      CHECK(u00.coefficients()[d->outer_dofs()[i]] == g[static_cast<Eigen::Index>(i)]);
    CHECK(d->interior_residual(u00.coefficients(), d->load()) <= 1e-11);
  }
  SUBCASE("energy against an element-by-element rebuild") {
    const auto d = make_discretization(fixtures::problem(8, [](double, double) { return Vec2{1, 0}; }, fixtures::zero()));
    const FeFunction u00 = compute_u00(*d);
    const Vector& u = u00.coefficients();
    const double e = energy(d->a_background(), u, u);
    CHECK(e > 0.0);
    CHECK(std::abs(e - background_energy_by_elements(*d, u)) <= 1e-12 * e);
  }
}

TEST_CASE("harmonic characteristics") {
  const auto d = fixtures::generic_disc();
  const HarmonicCharacteristics ch = compute_characteristics(*d);
  CHECK(relative_asymmetry(ch.a_geom) <= 1e-12);
  CHECK(smallest_eigenvalue(ch.a_geom).value > 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(ch.a_geom);
  CHECK(smallest_eigenvalue(ch.a_geom).value == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-10));

  const Vector zero = Vector::Zero(d->space()->ndofs());
  for (int l = 0; l < kRigidModes; ++l) {
    const Vector& chi = ch.chi[static_cast<std::size_t>(l)].coefficients();
    CHECK(max_abs(d->gather_inclusion(chi) - d->basis().modes[static_cast<std::size_t>(l)]) == 0.0);
    for (auto k : d->outer_dofs()) CHECK(chi[k] == 0.0);
    CHECK(d->interior_residual(chi, zero) <= 1e-11);
  }

  // Energy entries against the interface-flux pairing.
  const double scale = ch.a_geom.cwiseAbs().maxCoeff();
  for (int l = 0; l < kRigidModes; ++l) {
    const InterfaceFunctional flux = interface_flux_functional(*d, ch.chi[static_cast<std::size_t>(l)], false);
    for (int m = 0; m < kRigidModes; ++m)
      CHECK(std::abs(flux.apply(d->basis().modes[static_cast<std::size_t>(m)]) - ch.a_geom(l, m)) <= 1e-11 * scale);
  }
}

TEST_CASE("c0 and u0") {
  SUBCASE("zero data") {
    const auto d = make_discretization(fixtures::problem(8, fixtures::zero(), fixtures::zero()));
    const HarmonicCharacteristics ch = compute_characteristics(*d);
    const FeFunction u00 = compute_u00(*d);
    const ModeCoefficients c0 = solve_c0(*d, u00, ch);
    for (double c : c0) CHECK(c == 0.0);
    CHECK(compose_u0(u00, ch, c0).u.coefficients().isZero(0.0));
  }
  SUBCASE("rigid boundary data gives the rigid motion") {
    const auto d = fixtures::rigid_disc();
    const HarmonicCharacteristics ch = compute_characteristics(*d);
    const FeFunction u00 = compute_u00(*d);
    const ExpansionTerm t0 = compose_u0(u00, ch, solve_c0(*d, u00, ch));
    const FeFunction motion = interpolate(d->space(), d->data().boundary);
    CHECK(max_abs(t0.u.coefficients() - motion.coefficients()) <= 1e-10);
  }
  SUBCASE("generic data") {
    const auto d = fixtures::generic_disc();
    const HarmonicCharacteristics ch = compute_characteristics(*d);
    const FeFunction u00 = compute_u00(*d);
    const ModeCoefficients c0 = solve_c0(*d, u00, ch);
    const ModeCoefficients c0_flux = solve_c0_flux_form(*d, u00);
    for (int l = 0; l < kRigidModes; ++l)
      CHECK(std::abs(c0[static_cast<std::size_t>(l)] - c0_flux[static_cast<std::size_t>(l)]) <=
            1e-9 * (std::abs(c0[static_cast<std::size_t>(l)]) + 1e-3));
    const ExpansionTerm t0 = compose_u0(u00, ch, c0);
    const double semi = h1_seminorm(t0.u);
    CHECK(energy(d->a_inclusion(), t0.u.coefficients(), t0.u.coefficients()) <= 1e-11 * semi * semi);
    CHECK(limit_problem_residual(*d, t0.u) <= 1e-10);
    // A perturbed field fails the same residual check.
    FeFunction off = t0.u;
    off.coefficients()[d->interior_background_dofs()[5]] += 1e-3;
    CHECK(limit_problem_residual(*d, off) > 1e-6);
  }
}

TEST_CASE("interface flux functional") {
  const auto d = fixtures::generic_disc();
  SUBCASE("zero trace, zero residual") {
    const auto dz = make_discretization(fixtures::problem(8, fixtures::zero(), [](double x, double y) {
      return Vec2{x * y, x - y};
    }));
    const FeFunction u00 = compute_u00(*dz);
    const InterfaceFunctional f = interface_flux_functional(*dz, u00, false);
    CHECK(f.interior_residual <= 1e-11);
    // Nonzero boundary data still exerts a traction; only the zero field gives zero.
    const InterfaceFunctional z = interface_flux_functional(*dz, FeFunction(dz->space()), false);
    CHECK(z.weights.isZero(0.0));
  }
  SUBCASE("extension independence") {
    const Vector zero_outer = Vector::Zero(static_cast<Eigen::Index>(d->outer_dofs().size()));
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
      const FeFunction u = random_harmonic(*d, seed);
      std::mt19937_64 rng(seed + 100);
      std::uniform_real_distribution<double> dist(-1, 1);
      Vector z(static_cast<Eigen::Index>(d->inclusion_dofs().size()));
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = dist(rng);
      const FeFunction zero_ext(d->space(), d->scatter_inclusion(z));
      const FeFunction harm_ext(d->space(), d->extend(z, zero_outer, Vector::Zero(d->space()->ndofs())));
      const double a = interface_flux_value(*d, u, zero_ext, false);
      const double b = interface_flux_value(*d, u, harm_ext, false);
      const double scale = std::sqrt(energy(d->a_background(), u.coefficients(), u.coefficients()) *
                                     energy(d->a_background(), harm_ext.coefficients(), harm_ext.coefficients()));
      CHECK(std::abs(a - b) <= 1e-11 * scale);
      CHECK(std::abs(interface_flux_functional(*d, u, false).apply(z) - a) <= 1e-12 * scale);
    }
  }
  SUBCASE("load-corrected form is extension independent for u00") {
    const FeFunction u00 = compute_u00(*d);
    const Vector z = d->basis().modes[2];
    const Vector zero_outer = Vector::Zero(static_cast<Eigen::Index>(d->outer_dofs().size()));
    const FeFunction zero_ext(d->space(), d->scatter_inclusion(z));
    const FeFunction harm_ext(d->space(), d->extend(z, zero_outer, Vector::Zero(d->space()->ndofs())));
    const double a = interface_flux_value(*d, u00, zero_ext, true);
    const double b = interface_flux_value(*d, u00, harm_ext, true);
    CHECK(std::abs(a - b) <= 1e-11 * (std::abs(a) + 1.0));
  }
  SUBCASE("non-harmonic field is rejected") {
    Vector v = Vector::Zero(d->space()->ndofs());
    v[d->interior_background_dofs()[0]] = 1.0;
    CHECK_THROWS_AS(interface_flux_functional(*d, FeFunction(d->space(), v), false), ConsistencyError);
  }
}

TEST_CASE("recursion") {
  SUBCASE("zero data gives zero terms") {
    const auto d = make_discretization(fixtures::problem(8, fixtures::zero(), fixtures::zero()));
    const ExpansionSeries s = build_series(d, 3);
    for (const auto& t : s.terms) CHECK(t.u.coefficients().isZero(0.0));
    CHECK(all_hard_pass(s.checks));
  }
  SUBCASE("rigid data terminates") {
    const auto d = fixtures::rigid_disc();
    const ExpansionSeries s = build_series(d, 3);
    for (int j = 1; j <= 3; ++j) CHECK(max_abs(s.terms[static_cast<std::size_t>(j)].u.coefficients()) <= 1e-10);
    CHECK(s.steps[0].negligible_rhs);
    CHECK(all_hard_pass(s.checks));
  }
  SUBCASE("generic data: every recorded check passes, ratios are j-independent") {
    const auto d = fixtures::generic_disc();
    const ExpansionSeries s = build_series(d, 5);
    for (const auto& c : s.checks) CHECK_MESSAGE(c.pass, c.name << " = " << c.value);
    REQUIRE(s.steps.size() == 5);
    for (const auto& st : s.steps) CHECK(st.relative_compatibility <= 1e-10);
    std::vector<double> ratios;
    for (int j = 1; j <= 4; ++j)
      ratios.push_back(h1_norm(s.terms[static_cast<std::size_t>(j + 1)].u) / h1_norm(s.terms[static_cast<std::size_t>(j)].u));
    const double c_fit = *std::max_element(ratios.begin(), ratios.end());
    for (double r : ratios) CHECK(r >= 0.75 * c_fit);
    for (int j = 1; j <= 5; ++j)
      for (auto k : d->outer_dofs()) CHECK(s.terms[static_cast<std::size_t>(j)].u.coefficients()[k] == 0.0);
    for (int j = 0; j <= 2; ++j) CHECK(power_matching_residual(s, j, 50, 99) <= 1e-9);
    CHECK(galerkin_projection_ratio(*d, s.characteristics, 10, 5) <= 1.0 + 1e-12);
  }
  SUBCASE("upstream error in c_j surfaces as an incompatible Neumann problem") {
    const auto d = fixtures::generic_disc();
    const HarmonicCharacteristics ch = compute_characteristics(*d);
    const FeFunction u00 = compute_u00(*d);
    ModeCoefficients c0 = solve_c0(*d, u00, ch);
    c0[1] += 0.1;
    CHECK_THROWS_AS(next_term(*d, ch, compose_u0(u00, ch, c0)), CompatibilityError);
  }
  SUBCASE("negative index") { CHECK_THROWS_AS(build_series(fixtures::generic_disc(8), -1), UsageError); }
}

TEST_CASE("partial sums") {
  const auto d = fixtures::generic_disc();
  const ExpansionSeries s = build_series(d, 3);
  CHECK(partial_sum(s, 5.0, 0).coefficients() == s.terms[0].u.coefficients());
  const Vector& u0 = s.terms[0].u.coefficients();
  CHECK(max_abs(partial_sum(s, 1e12, 3).coefficients() - u0) <= 1e-10 * max_abs(u0));
  for (int J = 1; J <= 3; ++J) {
    const double eta = 37.0;
    const Vector diff = partial_sum(s, eta, J).coefficients() - partial_sum(s, eta, J - 1).coefficients();
    const Vector expected = std::pow(eta, -J) * s.terms[static_cast<std::size_t>(J)].u.coefficients();
    CHECK(max_abs(diff - expected) <= 1e-15 * (max_abs(partial_sum(s, eta, J).coefficients()) + max_abs(expected)));
  }
  CHECK_THROWS_AS(partial_sum(s, 10.0, 4), UsageError);
  CHECK_THROWS_AS(partial_sum(s, 10.0, -1), UsageError);
  CHECK_THROWS_AS(partial_sum(s, 0.0, 1), UsageError);
}

TEST_CASE("series export") {
  const auto d = fixtures::generic_disc(8);
  const ExpansionSeries s = build_series(d, 2);
  const auto dir = std::filesystem::temp_directory_path() / "hce_export_test";
  std::filesystem::remove_all(dir);
  export_series(s, dir.string());
  for (const auto& t : s.terms) {
    const FeFunction back = load_fefield_file((dir / ("term_" + std::to_string(t.j) + ".fefield")).string(), d->space());
    CHECK(back.coefficients() == t.u.coefficients());
  }
  std::ifstream manifest(dir / "manifest.csv");
  std::string header;
  std::getline(manifest, header);
  CHECK(header == "j,c1,c2,c3,norm_h1,norm_l2,seminorm_h1");
  int rows = 0;
  for (std::string line; std::getline(manifest, line);) ++rows;
  CHECK(rows == 3);
  std::filesystem::remove_all(dir);
}
