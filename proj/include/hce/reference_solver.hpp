#pragma once

// Direct solve of the weighted problem
//   A_D0(u, v) + eta A_D1(u, v) = F(v),  u = g on the outer boundary,
// on the same mesh and space as the series.

#include <string>

#include "hce/expansion.hpp"

namespace hce {

struct SolverStats {
  std::string method;          // "ldlt" or "pcg-jacobi"
  Eigen::Index iterations = 0;  // 0 for the factorization
  double relative_residual = 0.0;  // ||K u - b||_inf / (||K||_inf ||u||_inf + ||b||_inf), free dofs
};

struct DirectSolution {
  double eta = 0.0;
  FeFunction u;
  SolverStats stats;
};

inline constexpr double kDirectResidualTol = 1e-12;

/// Factorization first; Jacobi-PCG (rel. tol 1e-13, 50 * ndof iterations)
/// when the factorization fails or misses the residual contract.
DirectSolution solve_full(const Discretization& disc, double eta);

/// |u - P_RB u|_{H1(D1)} with P_RB the lumped L2(D1) projection onto the rigid modes.
double inclusion_rigidity_gap(const FeFunction& u, const Discretization& disc);
inline double inclusion_rigidity_gap(const DirectSolution& sol, const Discretization& disc) {
  return inclusion_rigidity_gap(sol.u, disc);
}

}  // namespace hce
