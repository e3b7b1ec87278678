#pragma once

// Sparse direct solvers used by every solve in the library.
//
// Matrices are assembled in double; factorizations run in long double with
// one step of iterative refinement so that the high-contrast solves and the
// term-by-term recursion stay near double round-off.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <memory>

namespace hce {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Symmetric positive definite solver (sparse LDL^T). Throws SolveError when
/// the factorization fails or a pivot is not positive.
class SpdSolver {
 public:
  explicit SpdSolver(const SparseMatrix& a);
  Vector solve(const Vector& b) const;
  Eigen::Index size() const { return a_.rows(); }
  double min_pivot() const { return min_pivot_; }

 private:
  using LMatrix = Eigen::SparseMatrix<long double>;
  LMatrix a_;
  std::shared_ptr<Eigen::SimplicialLDLT<LMatrix>> ldlt_;
  double min_pivot_ = 0.0;
};

/// General square sparse solver (LU), used for indefinite saddle-point systems.
class LuSolver {
 public:
  explicit LuSolver(const SparseMatrix& a);
  Vector solve(const Vector& b) const;

 private:
  using LMatrix = Eigen::SparseMatrix<long double>;
  LMatrix a_;
  std::shared_ptr<Eigen::SparseLU<LMatrix>> lu_;
};

struct CgStats {
  Eigen::Index iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients; `x` holds the initial guess.
CgStats solve_pcg_jacobi(const SparseMatrix& a, const Vector& b, Vector& x, double rel_tol,
                         Eigen::Index max_iterations);

struct EigenEstimate {
  double value = 0.0;
  int iterations = 0;
};

/// Eigenvalue of smallest magnitude of a symmetric matrix by inverse power
/// iteration (Rayleigh quotient of the converged iterate).
EigenEstimate smallest_eigenvalue(const SparseMatrix& a, int max_iterations = 500, double tol = 1e-12);
EigenEstimate smallest_eigenvalue(const Eigen::MatrixXd& a, int max_iterations = 500, double tol = 1e-12);

/// max |A - A^T| / max |A|.
double relative_asymmetry(const SparseMatrix& a);
double relative_asymmetry(const Eigen::MatrixXd& a);

}  // namespace hce
