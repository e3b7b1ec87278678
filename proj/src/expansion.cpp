#include "hce/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "hce/errors.hpp"
#include "hce/field_io.hpp"
#include "text_util.hpp"

namespace hce {

namespace {

Eigen::Vector3d solve_geom(const Eigen::Matrix3d& a, const Eigen::Vector3d& rhs) {
  const Eigen::LLT<Eigen::Matrix3d> llt(a);
  if (llt.info() != Eigen::Success) throw SolveError("A_geom is not positive definite");
  return llt.solve(rhs);
}

ModeCoefficients to_modes(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

double max_abs(const Vector& v) { return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0; }

double max_abs_at(const Vector& v, const std::vector<Eigen::Index>& dofs) {
  double m = 0.0;
  for (auto d : dofs) m = std::max(m, std::abs(v[d]));
  return m;
}

FeFunction rigid_part(const HarmonicCharacteristics& chars, const ModeCoefficients& c) {
  FeFunction sum(chars.chi.front().space_ptr());
  for (int l = 0; l < kRigidModes; ++l) sum.coefficients() += c[static_cast<std::size_t>(l)] * chars.chi[static_cast<std::size_t>(l)].coefficients();
  return sum;
}

}  // namespace

Discretization::Discretization(ProblemData data) : data_(std::move(data)) {
  if (!data_.mesh) throw UsageError("problem has no mesh");
  if (!data_.load || !data_.boundary) throw UsageError("problem needs a load and a boundary field");
  const ValidationReport report = validate(*data_.mesh);
  if (!report.ok()) throw GeometryError("invalid mesh: " + report.summary());
  data_.material.validate();

  space_ = make_space(data_.mesh);
  inclusion_ = restrict_to(*data_.mesh, Region::Inclusion);
  inclusion_space_ = make_space(std::make_shared<const Mesh>(inclusion_.mesh));
  basis_ = rb_basis(inclusion_space_);

  a0_ = assemble_stiffness(*space_, RegionFilter::Background, data_.material);
  a1_ = assemble_stiffness(*space_, RegionFilter::Inclusion, data_.material);
  a1_local_ = assemble_stiffness(*inclusion_space_, RegionFilter::All, data_.material);
  load_all_ = assemble_load(*space_, data_.load, RegionFilter::All);
  load_bg_ = assemble_load(*space_, data_.load, RegionFilter::Background);
  load_inc_ = assemble_load(*space_, data_.load, RegionFilter::Inclusion);

  std::set<Index> outer_vertices;
  std::set<Index> interface_vertices;
  for (const auto& e : data_.mesh->boundary_edges) {
    auto& target = e.marker == EdgeMarker::Outer ? outer_vertices : interface_vertices;
    target.insert(e.vertex_ids[0]);
    target.insert(e.vertex_ids[1]);
  }
  interface_vertices_.assign(interface_vertices.begin(), interface_vertices.end());
  for (Index v : outer_vertices) {
    outer_dofs_.push_back(FeSpace::dof(v, 0));
    outer_dofs_.push_back(FeSpace::dof(v, 1));
  }
  for (Index v : inclusion_.to_parent) {
    inclusion_dofs_.push_back(FeSpace::dof(v, 0));
    inclusion_dofs_.push_back(FeSpace::dof(v, 1));
  }
  std::vector<bool> constrained(static_cast<std::size_t>(space_->ndofs()), false);
  for (auto d : outer_dofs_) constrained[static_cast<std::size_t>(d)] = true;
  for (auto d : inclusion_dofs_) constrained[static_cast<std::size_t>(d)] = true;
  for (Eigen::Index d = 0; d < space_->ndofs(); ++d)
    if (!constrained[static_cast<std::size_t>(d)]) interior_bg_dofs_.push_back(d);

  std::vector<Eigen::Index> bg_constrained = outer_dofs_;
  bg_constrained.insert(bg_constrained.end(), inclusion_dofs_.begin(), inclusion_dofs_.end());
  bg_solver_ = std::make_shared<DirichletSolver>(a0_, bg_constrained);
  neumann_ = std::make_shared<NeumannSolver>(a1_local_, basis_);

  Vector row_sums = Vector::Zero(a0_.rows());
  for (int k = 0; k < a0_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a0_, k); it; ++it) row_sums[it.row()] += std::abs(it.value());
  a0_norm_inf_ = row_sums.size() > 0 ? row_sums.maxCoeff() : 0.0;
}

DiscretizationPtr make_discretization(ProblemData data) {
  return std::make_shared<const Discretization>(std::move(data));
}

Vector Discretization::boundary_values() const {
  Vector g(static_cast<Eigen::Index>(outer_dofs_.size()));
  for (std::size_t i = 0; i < outer_dofs_.size(); i += 2) {
    const Index v = static_cast<Index>(outer_dofs_[i] / 2);
    const Vertex& p = mesh().vertices[v];
    const Vec2 val = data_.boundary(p.x, p.y);
    g[static_cast<Eigen::Index>(i)] = val.x;
    g[static_cast<Eigen::Index>(i + 1)] = val.y;
  }
  return g;
}

Vector Discretization::gather_inclusion(const Vector& global) const {
  Vector local(static_cast<Eigen::Index>(inclusion_dofs_.size()));
  for (std::size_t k = 0; k < inclusion_dofs_.size(); ++k) local[static_cast<Eigen::Index>(k)] = global[inclusion_dofs_[k]];
  return local;
}

Vector Discretization::scatter_inclusion(const Vector& local) const {
  Vector global = Vector::Zero(space_->ndofs());
  for (std::size_t k = 0; k < inclusion_dofs_.size(); ++k) global[inclusion_dofs_[k]] = local[static_cast<Eigen::Index>(k)];
  return global;
}

Vector Discretization::extend(const Vector& inclusion_values, const Vector& outer_values, const Vector& load) const {
  Vector values(static_cast<Eigen::Index>(outer_dofs_.size() + inclusion_dofs_.size()));
  values << outer_values, inclusion_values;
  return bg_solver_->solve(load, values);
}

double Discretization::interior_residual(const Vector& u, const Vector& b) const {
  const Vector r = a0_ * u - b;
  double rmax = 0.0;
  double bmax = 0.0;
  for (auto d : interior_bg_dofs_) {
    rmax = std::max(rmax, std::abs(r[d]));
    bmax = std::max(bmax, std::abs(b[d]));
  }
  const double scale = a0_norm_inf_ * u.cwiseAbs().maxCoeff() + bmax;
  return scale > 0.0 ? rmax / scale : 0.0;
}

FeFunction compute_u00(const Discretization& disc) {
  const Vector zero_inc = Vector::Zero(static_cast<Eigen::Index>(disc.inclusion_dofs().size()));
  return FeFunction(disc.space(), disc.extend(zero_inc, disc.boundary_values(), disc.load()));
}

HarmonicCharacteristics compute_characteristics(const Discretization& disc) {
  HarmonicCharacteristics chars;
  const Vector zero_outer = Vector::Zero(static_cast<Eigen::Index>(disc.outer_dofs().size()));
  const Vector zero_load = Vector::Zero(disc.space()->ndofs());
  for (int l = 0; l < kRigidModes; ++l)
    chars.chi.emplace_back(disc.space(), disc.extend(disc.basis().modes[static_cast<std::size_t>(l)], zero_outer, zero_load));
  for (int l = 0; l < kRigidModes; ++l)
    for (int m = 0; m < kRigidModes; ++m)
      chars.a_geom(l, m) = energy(disc.a_background(), chars.chi[static_cast<std::size_t>(l)].coefficients(),
                                  chars.chi[static_cast<std::size_t>(m)].coefficients());
  return chars;
}

ModeCoefficients solve_c0(const Discretization& disc, const FeFunction& u00, const HarmonicCharacteristics& chars) {
  Eigen::Vector3d rhs;
  const Vector a0u = disc.a_background() * u00.coefficients();
  for (int m = 0; m < kRigidModes; ++m) {
    const Vector& chi = chars.chi[static_cast<std::size_t>(m)].coefficients();
    rhs[m] = disc.load().dot(chi) - a0u.dot(chi);
  }
  return to_modes(solve_geom(chars.a_geom, rhs));
}

ModeCoefficients solve_c0_flux_form(const Discretization& disc, const FeFunction& u00) {
  const HarmonicCharacteristics chars = compute_characteristics(disc);
  const RigidBodyBasis& basis = disc.basis();
  Eigen::Matrix3d mat;
  for (int l = 0; l < kRigidModes; ++l) {
    const InterfaceFunctional flux = interface_flux_functional(disc, chars.chi[static_cast<std::size_t>(l)], false);
    for (int m = 0; m < kRigidModes; ++m) mat(m, l) = flux.apply(basis.modes[static_cast<std::size_t>(m)]);
  }
  const InterfaceFunctional flux_u00 = interface_flux_functional(disc, u00, true);
  const Vector load_d1 = disc.gather_inclusion(disc.load_inclusion());
  Eigen::Vector3d rhs;
  for (int m = 0; m < kRigidModes; ++m) {
    const Vector& xi = basis.modes[static_cast<std::size_t>(m)];
    rhs[m] = load_d1.dot(xi) - flux_u00.apply(xi);
  }
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(mat);
  if (!lu.isInvertible()) throw SolveError("interface-flux system is singular");
  return to_modes(lu.solve(rhs));
}

ExpansionTerm compose_u0(const FeFunction& u00, const HarmonicCharacteristics& chars, const ModeCoefficients& c0) {
  return {0, u00 + rigid_part(chars, c0), c0, u00};
}

InterfaceFunctional interface_flux_functional(const Discretization& disc, const FeFunction& u, bool include_load,
                                              double tol) {
  const Vector b = include_load ? disc.load_background() : Vector(Vector::Zero(disc.space()->ndofs()));
  InterfaceFunctional f;
  f.interior_residual = disc.interior_residual(u.coefficients(), b);
  if (f.interior_residual > tol)
    throw ConsistencyError("field is not discretely harmonic in the background (relative residual " +
                           std::to_string(f.interior_residual) + ")");
  f.weights = disc.gather_inclusion(disc.a_background() * u.coefficients() - b);
  return f;
}

double interface_flux_value(const Discretization& disc, const FeFunction& u, const FeFunction& extension,
                            bool include_load) {
  double v = energy(disc.a_background(), extension.coefficients(), u.coefficients());
  if (include_load) v -= disc.load_background().dot(extension.coefficients());
  return v;
}

NextTerm next_term(const Discretization& disc, const HarmonicCharacteristics& chars, const ExpansionTerm& current,
                   double compatibility_tol) {
  const bool first = current.j == 0;
  const InterfaceFunctional flux = interface_flux_functional(disc, current.u, first);
  Vector rhs = -flux.weights;
  double scale = disc.a_background_norm_inf() * max_abs(current.u.coefficients());
  if (first) {
    rhs += disc.gather_inclusion(disc.load_inclusion());
    scale += max_abs(disc.load());
  }
  const bool negligible = max_abs(rhs) <= kNegligibleRhs * scale;
  if (negligible) rhs.setZero();

  const NeumannSolution local = disc.neumann_solver().solve(rhs, compatibility_tol);

  const Vector zero_outer = Vector::Zero(static_cast<Eigen::Index>(disc.outer_dofs().size()));
  const Vector zero_load = Vector::Zero(disc.space()->ndofs());
  FeFunction u_tilde(disc.space(), disc.extend(local.u.coefficients(), zero_outer, zero_load));

  Eigen::Vector3d w;
  const Vector a0u = disc.a_background() * u_tilde.coefficients();
  for (int m = 0; m < kRigidModes; ++m) w[m] = a0u.dot(chars.chi[static_cast<std::size_t>(m)].coefficients());
  const Eigen::Vector3d c = solve_geom(chars.a_geom, -w);
  const double c_scale = chars.a_geom.norm() * c.norm() + w.norm();

  NextTerm out{{current.j + 1, u_tilde + rigid_part(chars, to_modes(c)), to_modes(c), u_tilde}, {}};
  out.diagnostics.j = current.j;
  out.diagnostics.compatibility = local.compatibility;
  out.diagnostics.relative_compatibility = local.relative_compatibility;
  out.diagnostics.projected_residual = local.projected_residual;
  out.diagnostics.orthogonality = local.orthogonality;
  out.diagnostics.c_residual = c_scale > 0.0 ? (chars.a_geom * c + w).norm() / c_scale : 0.0;
  out.diagnostics.negligible_rhs = negligible;
  return out;
}

ExpansionSeries build_series(DiscretizationPtr disc_ptr, int max_index, double compatibility_tol) {
  if (max_index < 0) throw UsageError("series needs max index >= 0");
  if (!disc_ptr) throw UsageError("series needs a discretization");
  const Discretization& disc = *disc_ptr;
  ExpansionSeries s{disc_ptr, compute_characteristics(disc), {}, {}, {}};
  auto& checks = s.checks;
  const auto& chars = s.characteristics;

  const FeFunction u00 = compute_u00(disc);
  checks.push_back(check_le("u00.inclusion_zero", max_abs_at(u00.coefficients(), disc.inclusion_dofs()), 0.0));
  {
    const Vector g = disc.boundary_values();
    double dev = 0.0;
    for (std::size_t i = 0; i < disc.outer_dofs().size(); ++i)
      dev = std::max(dev, std::abs(u00.coefficients()[disc.outer_dofs()[i]] - g[static_cast<Eigen::Index>(i)]));
    checks.push_back(check_le("u00.outer_equals_g", dev, 0.0));
  }
  checks.push_back(check_le("u00.interior_residual", disc.interior_residual(u00.coefficients(), disc.load()), 1e-11));

  const Vector zero_load = Vector::Zero(disc.space()->ndofs());
  for (int l = 0; l < kRigidModes; ++l) {
    const std::string tag = "chi[" + std::to_string(l) + "]";
    const Vector& chi = chars.chi[static_cast<std::size_t>(l)].coefficients();
    const Vector dev = disc.gather_inclusion(chi) - disc.basis().modes[static_cast<std::size_t>(l)];
    checks.push_back(check_le(tag + ".equals_mode_on_inclusion", dev.cwiseAbs().maxCoeff(), 0.0));
    checks.push_back(check_le(tag + ".outer_zero", max_abs_at(chi, disc.outer_dofs()), 0.0));
    checks.push_back(check_le(tag + ".harmonic", disc.interior_residual(chi, zero_load), 1e-11));
  }
  checks.push_back(check_le("a_geom.asymmetry", relative_asymmetry(chars.a_geom), 1e-12));
  {
    const double lmin = smallest_eigenvalue(chars.a_geom).value;
    checks.push_back({"a_geom.min_eigenvalue_positive", lmin, 0.0, lmin > 0.0, false, "inverse power iteration"});
  }

  const ModeCoefficients c0 = solve_c0(disc, u00, chars);
  {
    Eigen::Vector3d rhs;
    const Vector a0u = disc.a_background() * u00.coefficients();
    for (int m = 0; m < kRigidModes; ++m) {
      const Vector& chi = chars.chi[static_cast<std::size_t>(m)].coefficients();
      rhs[m] = disc.load().dot(chi) - a0u.dot(chi);
    }
    const Eigen::Vector3d cv(c0[0], c0[1], c0[2]);
    const double scale = chars.a_geom.norm() * cv.norm() + rhs.norm();
    checks.push_back(check_le("c0.residual", scale > 0.0 ? (chars.a_geom * cv - rhs).norm() / scale : 0.0, 1e-12));
  }
  s.terms.push_back(compose_u0(u00, chars, c0));
  {
    const FeFunction& u0 = s.terms[0].u;
    const double semi = h1_seminorm(u0);
    const double e1 = energy(disc.a_inclusion(), u0.coefficients(), u0.coefficients());
    checks.push_back(check_le("u0.inclusion_strain_energy", semi > 0.0 ? std::abs(e1) / (semi * semi) : std::abs(e1), 1e-11));
    checks.push_back(check_le("u0.limit_problem_residual", limit_problem_residual(disc, u0), 1e-10));
  }

  for (int j = 0; j < max_index; ++j) {
    NextTerm next = next_term(disc, chars, s.terms.back(), compatibility_tol);
    const std::string step = "step[" + std::to_string(j) + "]";
    const std::string term = "term[" + std::to_string(j + 1) + "]";
    const StepDiagnostics& d = next.diagnostics;
    checks.push_back(check_le(step + ".compatibility", d.relative_compatibility, compatibility_tol));
    checks.push_back(check_le(step + ".neumann_residual", d.projected_residual, 1e-11));
    checks.push_back(check_le(step + ".rb_orthogonality", d.orthogonality, 1e-11));
    checks.push_back(check_le(step + ".c_residual", d.c_residual, 1e-12));
    const Vector& u = next.term.u.coefficients();
    checks.push_back(check_le(term + ".outer_zero", max_abs_at(u, disc.outer_dofs()), 0.0));
    checks.push_back(check_le(term + ".harmonic", disc.interior_residual(u, zero_load), 1e-11));
    const Vector dev = u - next.term.u_tilde.coefficients() - rigid_part(chars, next.term.c).coefficients();
    const double umax = u.cwiseAbs().maxCoeff();
    checks.push_back(check_le(term + ".decomposition", umax > 0.0 ? dev.cwiseAbs().maxCoeff() / umax : 0.0, 1e-14));
    s.terms.push_back(std::move(next.term));
    s.steps.push_back(d);
  }
  return s;
}

FeFunction partial_sum(const ExpansionSeries& series, double eta, int J) {
  if (J < 0 || J > series.max_index())
    throw UsageError("partial sum index " + std::to_string(J) + " outside built range 0.." +
                     std::to_string(series.max_index()));
  if (!(eta > 0.0)) throw UsageError("partial sum needs eta > 0");
  FeFunction sum = series.terms[0].u;
  for (int j = 1; j <= J; ++j) sum.coefficients() += std::pow(eta, -j) * series.terms[static_cast<std::size_t>(j)].u.coefficients();
  return sum;
}

double limit_problem_residual(const Discretization& disc, const FeFunction& u0) {
  const SparseMatrix& a0 = disc.a_background();
  const Vector r = a0 * u0.coefficients() - disc.load();
  const double u_energy = std::sqrt(std::max(0.0, energy(a0, u0.coefficients(), u0.coefficients())));
  double worst = 0.0;
  const auto account = [&](double res, double scale) {
    if (scale > 0.0) worst = std::max(worst, std::abs(res) / scale);
    else worst = std::max(worst, std::abs(res));
  };
  for (auto d : disc.interior_background_dofs())
    account(r[d], u_energy * std::sqrt(a0.coeff(d, d)) + std::abs(disc.load()[d]));

  // Raw rigid motions on the inclusion closure, zero elsewhere in D0.
  const Mesh& mesh = disc.mesh();
  for (int l = 0; l < kRigidModes; ++l) {
    Vector z = Vector::Zero(disc.space()->ndofs());
    for (Index v : disc.inclusion().to_parent) {
      const Vertex& p = mesh.vertices[v];
      const Vec2 val = l == 0 ? Vec2{1.0, 0.0} : l == 1 ? Vec2{0.0, 1.0} : Vec2{p.y, -p.x};
      z[FeSpace::dof(v, 0)] = val.x;
      z[FeSpace::dof(v, 1)] = val.y;
    }
    account(r.dot(z), u_energy * std::sqrt(std::max(0.0, energy(a0, z, z))) + std::abs(disc.load().dot(z)));
  }
  return worst;
}

namespace {

Vector random_test_field(const Discretization& disc, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(disc.space()->ndofs());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  for (auto d : disc.outer_dofs()) v[d] = 0.0;
  return v;
}

}  // namespace

double power_matching_residual(const ExpansionSeries& series, int j, int samples, std::uint64_t seed) {
  if (j < 0 || j + 1 > series.max_index()) throw UsageError("power matching needs terms j and j+1");
  const Discretization& disc = *series.disc;
  const Vector& uj = series.terms[static_cast<std::size_t>(j)].u.coefficients();
  const Vector& ujp = series.terms[static_cast<std::size_t>(j + 1)].u.coefficients();
  const Vector a0u = disc.a_background() * uj;
  const Vector a1u = disc.a_inclusion() * ujp;
  const double norms = h1_seminorm(series.terms[static_cast<std::size_t>(j)].u) +
                       h1_seminorm(series.terms[static_cast<std::size_t>(j + 1)].u);
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(j));
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector v = random_test_field(disc, rng);
    double res = a0u.dot(v) + a1u.dot(v);
    double scale = norms * h1_seminorm(FeFunction(disc.space(), v));
    if (j == 0) {
      const double fv = disc.load().dot(v);
      res -= fv;
      scale += std::abs(fv);
    }
    worst = std::max(worst, scale > 0.0 ? std::abs(res) / scale : std::abs(res));
  }
  return worst;
}

double galerkin_projection_ratio(const Discretization& disc, const HarmonicCharacteristics& chars, int samples,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const Vector zero_outer = Vector::Zero(static_cast<Eigen::Index>(disc.outer_dofs().size()));
  const Vector zero_load = Vector::Zero(disc.space()->ndofs());
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vector data(static_cast<Eigen::Index>(disc.inclusion_dofs().size()));
    for (Eigen::Index i = 0; i < data.size(); ++i) data[i] = dist(rng);
    const FeFunction w(disc.space(), disc.extend(data, zero_outer, zero_load));
    Eigen::Vector3d wv;
    const Vector a0w = disc.a_background() * w.coefficients();
    for (int l = 0; l < kRigidModes; ++l) wv[l] = a0w.dot(chars.chi[static_cast<std::size_t>(l)].coefficients());
    const Eigen::Vector3d y = solve_geom(chars.a_geom, -wv);
    const FeFunction proj = rigid_part(chars, to_modes(y));
    const double wn = h1_seminorm(w, RegionFilter::Background);
    if (wn > 0.0) worst = std::max(worst, h1_seminorm(proj, RegionFilter::Background) / wn);
  }
  return worst;
}

std::vector<InvariantRecord> expansion_invariants(const ExpansionSeries& series, std::uint64_t seed) {
  std::vector<InvariantRecord> out = series.checks;
  for (int j = 0; j + 1 <= series.max_index() && j <= 3; ++j)
    out.push_back(check_le("power_matching[" + std::to_string(j) + "]", power_matching_residual(series, j, 50, seed), 1e-9));
  out.push_back(check_le("galerkin_projection_ratio",
                         galerkin_projection_ratio(*series.disc, series.characteristics, 10, seed), 1.0 + 1e-12));
  return out;
}

void export_series(const ExpansionSeries& series, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::ofstream manifest(base / "manifest.csv");
  if (!manifest) throw Error("cannot write " + (base / "manifest.csv").string());
  manifest << "j,c1,c2,c3,norm_h1,norm_l2,seminorm_h1\n";
  for (const auto& t : series.terms) {
    const std::string name = "term_" + std::to_string(t.j) + ".fefield";
    save_fefield_file(t.u, (base / name).string());
    manifest << t.j << ',' << detail::format_double(t.c[0]) << ',' << detail::format_double(t.c[1]) << ','
             << detail::format_double(t.c[2]) << ',' << detail::format_double(h1_norm(t.u)) << ','
             << detail::format_double(l2_norm(t.u)) << ',' << detail::format_double(h1_seminorm(t.u)) << '\n';
  }
  if (!manifest) throw Error("write failed: " + (base / "manifest.csv").string());
}

}  // namespace hce
