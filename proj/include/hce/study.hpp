#pragma once

// eta sweep of truncation errors e_J(eta) = ||u_eta - sum_{j<=J} eta^{-j} u_j||_{H1},
// rate fits, the empirical ratio constant C_hat and the report files.

#include <optional>
#include <string>
#include <vector>

#include "hce/checks.hpp"
#include "hce/config.hpp"
#include "hce/reference_solver.hpp"

namespace hce {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<std::size_t> excluded;  // indices of zero errors left out of the fit
};

/// Least squares of log(error) against log(eta). Errors <= zero_tol count as
/// zero and are excluded; FitError when fewer than two positive points remain.
RateFit fit_rate(const std::vector<double>& etas, const std::vector<double>& errors, double zero_tol = 0.0);

/// max_{j>=1} ||u_{j+1}|| / ||u_j|| over consecutive nonzero norms; a norm
/// below zero_rel * max norm is zero. UsageError when no such pair exists.
double estimate_C(const std::vector<double>& term_norms, double zero_rel = 1e-12);

/// Relative truncation error at or below which a cell counts as exact.
inline constexpr double kExactRelError = 1e-14;

struct ErrorCell {
  double eta = 0.0;
  int J = 0;
  double e_abs = 0.0;
  double e_rel = 0.0;
  bool solved = false;
  bool exact = false;
  std::string message;  // failure reason when !solved
};

struct RateRow {
  int J = 0;
  std::optional<RateFit> fit;
  bool exact = false;  // every error of this J is zero
  std::string note;
};

struct StudyReport {
  StudyConfig config;
  std::vector<ErrorCell> cells;  // eta-major, J-minor
  std::vector<SolverStats> direct;  // one per eta, empty method on failure
  std::vector<double> term_norms;
  std::vector<ModeCoefficients> term_coefficients;
  std::vector<RateRow> rates;
  std::optional<double> c_hat;
  std::string c_hat_note;
  std::vector<InvariantRecord> invariants;

  bool all_pass() const;
  const ErrorCell& cell(std::size_t eta_index, int J) const;
};

StudyReport run_study(const StudyConfig& config);

/// errors.csv, terms.csv, rates.csv, invariants.csv, summary.csv, convergence.svg.
void emit_report(const StudyReport& report, const std::string& dir);

}  // namespace hce
