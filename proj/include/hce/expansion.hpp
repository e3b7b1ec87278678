#pragma once

// Term-by-term construction of the high-contrast series
//
//   u_eta = sum_j eta^{-j} u_j
//
// for one stiff inclusion. Every term is built from local problems:
//  * u_{0,0}: background Dirichlet problem with the load, zero on the inclusion,
//  * chi_l: background-harmonic extensions of the rigid modes,
//  * c_j: 3x3 systems with A_geom(l, m) = A_D0(chi_l, chi_m),
//  * u~_{j+1}: floating inclusion Neumann problem driven by the weak
//    interface traction of u_j, then extended harmonically into D0.
//
// All interface tractions are evaluated as weak residual functionals of the
// background stiffness, never pointwise.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hce/checks.hpp"
#include "hce/fem.hpp"
#include "hce/mesh.hpp"
#include "hce/rigid_body.hpp"

namespace hce {

struct ProblemData {
  std::shared_ptr<const Mesh> mesh;
  MaterialParams material;
  VectorField load;      // body force f
  VectorField boundary;  // Dirichlet data g on the outer boundary
};

/// Operators, dof classes and factorizations shared by the series and the
/// direct solver. Immutable once built.
class Discretization {
 public:
  explicit Discretization(ProblemData data);

  const ProblemData& data() const { return data_; }
  const Mesh& mesh() const { return *data_.mesh; }
  const SpacePtr& space() const { return space_; }
  const SubMesh& inclusion() const { return inclusion_; }
  const SpacePtr& inclusion_space() const { return inclusion_space_; }
  const RigidBodyBasis& basis() const { return basis_; }

  const SparseMatrix& a_background() const { return a0_; }    // A_D0 on the global space
  const SparseMatrix& a_inclusion() const { return a1_; }     // A_D1 on the global space
  const SparseMatrix& a_inclusion_local() const { return a1_local_; }  // A_D1 on the inclusion space
  const Vector& load() const { return load_all_; }
  const Vector& load_background() const { return load_bg_; }
  const Vector& load_inclusion() const { return load_inc_; }

  /// Global dofs on the outer boundary.
  const std::vector<Eigen::Index>& outer_dofs() const { return outer_dofs_; }
  /// Global dof of each inclusion-space dof (closure of D1, interface included).
  const std::vector<Eigen::Index>& inclusion_dofs() const { return inclusion_dofs_; }
  /// Background dofs that are neither outer nor inclusion-closure dofs.
  const std::vector<Eigen::Index>& interior_background_dofs() const { return interior_bg_dofs_; }
  /// Global vertex ids on the interface.
  const std::vector<Index>& interface_vertices() const { return interface_vertices_; }
  Vector boundary_values() const;  // g at outer_dofs()

  /// Background Dirichlet solver: constrained on outer and inclusion-closure dofs.
  const DirichletSolver& background_solver() const { return *bg_solver_; }
  const NeumannSolver& neumann_solver() const { return *neumann_; }

  Vector gather_inclusion(const Vector& global) const;
  Vector scatter_inclusion(const Vector& local) const;  // zero extension

  /// Harmonic extension: `inclusion_values` on D1-closure, `outer_values` on
  /// the outer boundary, background residual equal to `load` at interior dofs.
  Vector extend(const Vector& inclusion_values, const Vector& outer_values, const Vector& load) const;

  /// max |(A_D0 u - b)| over interior background dofs, relative to
  /// ||A_D0||_inf ||u||_inf + ||b||_inf.
  double interior_residual(const Vector& u, const Vector& b) const;
  double a_background_norm_inf() const { return a0_norm_inf_; }

 private:
  ProblemData data_;
  SpacePtr space_;
  SubMesh inclusion_;
  SpacePtr inclusion_space_;
  RigidBodyBasis basis_;
  SparseMatrix a0_, a1_, a1_local_;
  Vector load_all_, load_bg_, load_inc_;
  std::vector<Eigen::Index> outer_dofs_, inclusion_dofs_, interior_bg_dofs_;
  std::vector<Index> interface_vertices_;
  std::shared_ptr<DirichletSolver> bg_solver_;
  std::shared_ptr<NeumannSolver> neumann_;
  double a0_norm_inf_ = 0.0;
};

using DiscretizationPtr = std::shared_ptr<const Discretization>;

DiscretizationPtr make_discretization(ProblemData data);

struct HarmonicCharacteristics {
  std::vector<FeFunction> chi;  // kRigidModes global fields
  Eigen::Matrix3d a_geom;       // A_D0(chi_l, chi_m)
};

struct ExpansionTerm {
  int j = 0;
  FeFunction u;
  ModeCoefficients c{};
  FeFunction u_tilde;  // u minus its rigid part sum_l c_l chi_l
};

/// Diagnostics of the step that builds term j + 1 from term j.
struct StepDiagnostics {
  int j = 0;
  ModeCoefficients compatibility{};
  double relative_compatibility = 0.0;
  double projected_residual = 0.0;
  double orthogonality = 0.0;
  double c_residual = 0.0;  // relative residual of the A_geom system for c_{j+1}
  bool negligible_rhs = false;  // rhs at round-off level: u_{j+1} = 0, the series terminates
};

/// Neumann rhs entries at or below this fraction of ||A_D0||_inf ||u_j||_inf + ||f||_inf
/// are cancellation round-off.
inline constexpr double kNegligibleRhs = 1e-13;

FeFunction compute_u00(const Discretization& disc);

HarmonicCharacteristics compute_characteristics(const Discretization& disc);

/// A_geom c0 = [F(chi_m) - A_D0(u00, chi_m)]_m.
ModeCoefficients solve_c0(const Discretization& disc, const FeFunction& u00, const HarmonicCharacteristics& chars);

/// Same c0 from the interface-flux form: the matrix is the flux functional of
/// chi_l applied to xi_m, the rhs is the inclusion load minus the
/// load-corrected flux of u00, both on D1.
ModeCoefficients solve_c0_flux_form(const Discretization& disc, const FeFunction& u00);

ExpansionTerm compose_u0(const FeFunction& u00, const HarmonicCharacteristics& chars, const ModeCoefficients& c0);

/// Weak interface traction of a background field, as a functional on
/// inclusion-space test fields extended by zero into D0:
///   z -> A_D0(u, Z) - [int_D0 f . Z if include_load].
struct InterfaceFunctional {
  Vector weights;  // one per inclusion-space dof; zero away from the interface
  double interior_residual = 0.0;
  double apply(const Vector& z_inclusion) const { return weights.dot(z_inclusion); }
};

/// Throws ConsistencyError when u is not discretely harmonic (load-corrected
/// when include_load) in D0 to `tol`.
InterfaceFunctional interface_flux_functional(const Discretization& disc, const FeFunction& u, bool include_load,
                                              double tol = 1e-10);

/// A_D0(u, extension) - [int_D0 f . extension]; for any global extension field.
double interface_flux_value(const Discretization& disc, const FeFunction& u, const FeFunction& extension,
                            bool include_load);

struct NextTerm {
  ExpansionTerm term;
  StepDiagnostics diagnostics;
};

/// Builds u_{j+1} from a complete u_j (c_j already fixed).
NextTerm next_term(const Discretization& disc, const HarmonicCharacteristics& chars, const ExpansionTerm& current,
                   double compatibility_tol = 1e-10);

struct ExpansionSeries {
  DiscretizationPtr disc;
  HarmonicCharacteristics characteristics;
  std::vector<ExpansionTerm> terms;
  std::vector<StepDiagnostics> steps;       // steps[j] built terms[j + 1]
  std::vector<InvariantRecord> checks;      // per-term construction checks
  int max_index() const { return static_cast<int>(terms.size()) - 1; }
};

ExpansionSeries build_series(DiscretizationPtr disc, int max_index, double compatibility_tol = 1e-10);

/// sum_{j <= J} eta^{-j} u_j.
FeFunction partial_sum(const ExpansionSeries& series, double eta, int J);

/// Residual of the limit problem A_D0(u0, z) = F(z) over test fields that are
/// rigid on the inclusion and vanish on the outer boundary; the test basis is
/// rebuilt from raw rigid motions, independent of chi and the RB basis.
double limit_problem_residual(const Discretization& disc, const FeFunction& u0);

/// Max over random v (zero on the outer boundary) of the scaled residual of
/// A_D0(u_j, v) + A_D1(u_{j+1}, v) - [F(v) if j == 0].
double power_matching_residual(const ExpansionSeries& series, int j, int samples, std::uint64_t seed);

/// Max over random background-harmonic w~ of |P w~|_{H1(D0)} / |w~|_{H1(D0)},
/// P the A_D0-Galerkin projection onto span{chi_l}.
double galerkin_projection_ratio(const Discretization& disc, const HarmonicCharacteristics& chars, int samples,
                                 std::uint64_t seed);

/// Full invariant suite over a built series (construction checks plus the
/// randomized identities).
std::vector<InvariantRecord> expansion_invariants(const ExpansionSeries& series, std::uint64_t seed = 20240611);

/// term_<j>.fefield per term plus manifest.csv (j, c1, c2, c3, norm_h1, norm_l2, seminorm_h1).
void export_series(const ExpansionSeries& series, const std::string& dir);

}  // namespace hce
