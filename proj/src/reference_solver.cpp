#include "hce/reference_solver.hpp"

#include <cmath>
#include <sstream>

#include "hce/errors.hpp"

namespace hce {

namespace {

double backward_error(const SparseMatrix& k, const Vector& x, const Vector& b) {
  Vector row_sums = Vector::Zero(k.rows());
  for (int c = 0; c < k.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(k, c); it; ++it) row_sums[it.row()] += std::abs(it.value());
  const double kn = row_sums.size() > 0 ? row_sums.maxCoeff() : 0.0;
  const double xn = x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
  const double bn = b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
  const double scale = kn * xn + bn;
  const Vector r = k * x - b;
  const double rn = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  return scale > 0.0 ? rn / scale : 0.0;
}

}  // namespace

DirectSolution solve_full(const Discretization& disc, double eta) {
  const ContrastCoefficient weight(eta);
  const SparseMatrix k = assemble_stiffness(*disc.space(), RegionFilter::All, disc.data().material, weight);
  const ReducedSystem sys = apply_dirichlet(k, disc.load(), disc.outer_dofs(), disc.boundary_values());

  DirectSolution out{eta, FeFunction(disc.space()), {}};
  Vector x;
  std::string ldlt_failure;
  try {
    const SpdSolver solver(sys.matrix);
    x = solver.solve(sys.rhs);
    out.stats = {"ldlt", 0, backward_error(sys.matrix, x, sys.rhs)};
    if (out.stats.relative_residual <= kDirectResidualTol) {
      out.u = FeFunction(disc.space(), sys.expand(x));
      return out;
    }
    ldlt_failure = "residual " + std::to_string(out.stats.relative_residual);
  } catch (const SolveError& e) {
    ldlt_failure = e.what();
  }

  if (x.size() != sys.rhs.size() || !x.allFinite()) x = Vector::Zero(sys.rhs.size());
  const Eigen::Index max_it = 50 * disc.space()->ndofs();
  const CgStats cg = solve_pcg_jacobi(sys.matrix, sys.rhs, x, 1e-13, max_it);
  out.stats = {"pcg-jacobi", cg.iterations, backward_error(sys.matrix, x, sys.rhs)};
  if (!cg.converged || out.stats.relative_residual > kDirectResidualTol) {
    std::ostringstream msg;
    msg << "direct solve failed at eta=" << eta << " (factorization: " << ldlt_failure << "; pcg: " << cg.iterations
        << " iterations, relative residual " << cg.relative_residual << ")";
    throw SolveError(msg.str());
  }
  out.u = FeFunction(disc.space(), sys.expand(x));
  return out;
}

double inclusion_rigidity_gap(const FeFunction& u, const Discretization& disc) {
  const FeFunction local(disc.inclusion_space(), disc.gather_inclusion(u.coefficients()));
  return h1_seminorm(rb_project(local, disc.basis()).remainder);
}

}  // namespace hce
