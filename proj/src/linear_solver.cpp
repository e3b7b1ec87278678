#include "hce/linear_solver.hpp"

#include <cmath>
#include <functional>

#include "hce/errors.hpp"

namespace hce {

namespace {

using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

template <typename Factorization, typename LMatrix>
Vector refined_solve(const Factorization& f, const LMatrix& a, const Vector& b) {
  const LVector lb = b.cast<long double>();
  LVector x = f.solve(lb);
  const LVector r = lb - a * x;
  x += f.solve(r);
  return x.cast<double>();
}

EigenEstimate inverse_power(const std::function<Vector(const Vector&)>& solve,
                            const std::function<Vector(const Vector&)>& apply, Eigen::Index n,
                            int max_iterations, double tol) {
  // Deterministic start vector with components in every direction.
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  x.normalize();
  EigenEstimate est;
  double prev = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    Vector y = solve(x);
    const double ny = y.norm();
    if (!(ny > 0.0) || !std::isfinite(ny)) throw SolveError("inverse power iteration broke down");
    x = y / ny;
    est.value = x.dot(apply(x));
    est.iterations = it;
    if (it > 1 && std::abs(est.value - prev) <= tol * std::abs(est.value)) break;
    prev = est.value;
  }
  return est;
}

}  // namespace

SpdSolver::SpdSolver(const SparseMatrix& a) : a_(a.cast<long double>()) {
  if (a.rows() != a.cols()) throw SolveError("SPD solver needs a square matrix");
  if (a.rows() == 0) throw SolveError("SPD solver given an empty system");
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<LMatrix>>(a_);
  if (ldlt_->info() != Eigen::Success) throw SolveError("sparse LDL^T factorization failed");
  min_pivot_ = static_cast<double>(ldlt_->vectorD().minCoeff());
  if (!(min_pivot_ > 0.0))
    throw SolveError("matrix is not positive definite (pivot " + std::to_string(min_pivot_) + ")");
}

Vector SpdSolver::solve(const Vector& b) const {
  if (b.size() != a_.rows()) throw SolveError("rhs size mismatch");
  return refined_solve(*ldlt_, a_, b);
}

LuSolver::LuSolver(const SparseMatrix& a) : a_(a.cast<long double>()) {
  if (a.rows() != a.cols()) throw SolveError("LU solver needs a square matrix");
  a_.makeCompressed();
  lu_ = std::make_shared<Eigen::SparseLU<LMatrix>>();
  lu_->compute(a_);
  if (lu_->info() != Eigen::Success) throw SolveError("sparse LU factorization failed: singular system");
}

Vector LuSolver::solve(const Vector& b) const {
  if (b.size() != a_.rows()) throw SolveError("rhs size mismatch");
  return refined_solve(*lu_, a_, b);
}

CgStats solve_pcg_jacobi(const SparseMatrix& a, const Vector& b, Vector& x, double rel_tol,
                         Eigen::Index max_iterations) {
  CgStats stats;
  const Vector diag = a.diagonal();
  if ((diag.array() <= 0.0).any()) throw SolveError("Jacobi preconditioner needs a positive diagonal");
  const Vector inv_diag = diag.cwiseInverse();
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    stats.converged = true;
    return stats;
  }
  Vector r = b - a * x;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  stats.relative_residual = r.norm() / bnorm;
  while (stats.iterations < max_iterations && stats.relative_residual > rel_tol) {
    const Vector q = a * p;
    const double alpha = rz / p.dot(q);
    x += alpha * p;
    r -= alpha * q;
    ++stats.iterations;
    stats.relative_residual = r.norm() / bnorm;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  stats.converged = stats.relative_residual <= rel_tol;
  return stats;
}

EigenEstimate smallest_eigenvalue(const SparseMatrix& a, int max_iterations, double tol) {
  const LuSolver lu(a);
  return inverse_power([&](const Vector& v) { return lu.solve(v); }, [&](const Vector& v) { return Vector(a * v); },
                       a.rows(), max_iterations, tol);
}

EigenEstimate smallest_eigenvalue(const Eigen::MatrixXd& a, int max_iterations, double tol) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw SolveError("inverse power iteration on a singular matrix");
  return inverse_power([&](const Vector& v) { return Vector(lu.solve(v)); },
                       [&](const Vector& v) { return Vector(a * v); }, a.rows(), max_iterations, tol);
}

double relative_asymmetry(const SparseMatrix& a) {
  const SparseMatrix diff = a - SparseMatrix(a.transpose());
  double dmax = 0.0;
  double amax = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) amax = std::max(amax, std::abs(it.value()));
  return amax > 0.0 ? dmax / amax : 0.0;
}

double relative_asymmetry(const Eigen::MatrixXd& a) {
  const double amax = a.cwiseAbs().maxCoeff();
  return amax > 0.0 ? (a - a.transpose()).cwiseAbs().maxCoeff() / amax : 0.0;
}

}  // namespace hce
