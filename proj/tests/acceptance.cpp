// One line per acceptance criterion; exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "hce/field_io.hpp"
#include "hce/reference_solver.hpp"
#include "hce/study.hpp"

using namespace hce;

namespace {

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_1(const DiscretizationPtr& d, const ExpansionSeries& s) {
  const std::vector<double> etas{1e2, 1e3, 1e4};
  const std::vector<std::pair<double, double>> bands{{-1.1, -0.9}, {-2.2, -1.8}, {-3.3, -2.7}};
  std::vector<std::vector<double>> errors(3);
  for (double eta : etas) {
    const DirectSolution sol = solve_full(*d, eta);
    for (int J = 0; J < 3; ++J) errors[static_cast<std::size_t>(J)].push_back(h1_norm(sol.u - partial_sum(s, eta, J)));
  }
  bool ok = true;
  std::string detail;
  for (int J = 0; J < 3; ++J) {
    const RateFit f = fit_rate(etas, errors[static_cast<std::size_t>(J)]);
    const auto [lo, hi] = bands[static_cast<std::size_t>(J)];
    ok = ok && in(f.slope, lo, hi);
    detail += "s" + std::to_string(J) + "=" + fmt("%.4f", f.slope) + " in [" + fmt("%.1f", lo) + "," + fmt("%.1f", hi) + "] ";
  }
  report(1, "geometric convergence in contrast", ok, detail);
}

void criterion_2(const DiscretizationPtr& d, const ExpansionSeries& s) {
  const DirectSolution sol = solve_full(*d, 1e6);
  const double rel = h1_norm(sol.u - partial_sum(s, 1e6, 3)) / h1_norm(sol.u);
  report(2, "series vs direct at eta=1e6, J=3", rel <= 1e-4, "relative H1 error " + fmt("%.3e", rel) + " <= 1e-4");
}

void criterion_3(const DiscretizationPtr& d, const ExpansionSeries& s) {
  const std::vector<double> etas{1e2, 1e3, 1e4};
  std::vector<double> gaps;
  for (double eta : etas) gaps.push_back(inclusion_rigidity_gap(solve_full(*d, eta), *d));
  const RateFit f = fit_rate(etas, gaps);
  const Vector& u0 = s.terms[0].u.coefficients();
  const double semi = h1_seminorm(s.terms[0].u);
  const double ratio = std::abs(energy(d->a_inclusion(), u0, u0)) / (semi * semi);
  report(3, "rigid-body limit", in(f.slope, -1.2, -0.8) && ratio <= 1e-11,
         "gap slope " + fmt("%.4f", f.slope) + " in [-1.2,-0.8], A1(u0,u0)/|u0|^2 = " + fmt("%.2e", ratio) + " <= 1e-11");
}

void criterion_4(const DiscretizationPtr& d, const ExpansionSeries& s) {
  double worst = 0.0;
  bool ok = s.steps.size() == 5;
  for (int j = 0; j <= 4 && ok; ++j) {
    const ExpansionTerm& t = s.terms[static_cast<std::size_t>(j)];
    const Vector b = j == 0 ? d->load_background() : Vector(Vector::Zero(d->space()->ndofs()));
    Vector rhs = -d->gather_inclusion(d->a_background() * t.u.coefficients() - b);
    if (j == 0) rhs += d->gather_inclusion(d->load_inclusion());
    const ModeCoefficients r = check_compatibility(rhs, d->basis());
    double m = 0.0;
    for (double v : r) m = std::max(m, std::abs(v));
    const double rel = m / rhs.norm();
    worst = std::max({worst, rel, s.steps[static_cast<std::size_t>(j)].relative_compatibility});
    ok = ok && !s.steps[static_cast<std::size_t>(j)].negligible_rhs;
  }
  ok = ok && worst <= 1e-10;
  report(4, "compatibility at steps j=0..4", ok, "max relative RB residual " + fmt("%.2e", worst) + " <= 1e-10");
}

void criterion_5(const ExpansionSeries& s) {
  const double asym = relative_asymmetry(s.characteristics.a_geom);
  const double lmin = smallest_eigenvalue(s.characteristics.a_geom).value;
  report(5, "A_geom symmetric positive definite", asym <= 1e-12 && lmin > 0.0,
         "asymmetry " + fmt("%.2e", asym) + " <= 1e-12, lambda_min " + fmt("%.4g", lmin) + " > 0");
}

void criterion_6(const DiscretizationPtr& d, const ExpansionSeries& s) {
  const double r = limit_problem_residual(*d, s.terms[0].u);
  report(6, "limit-problem residual on V_RB", r <= 1e-10, "scaled residual " + fmt("%.2e", r) + " <= 1e-10");
}

void criterion_7(const ExpansionSeries& s) {
  double worst = 0.0;
  for (int j = 0; j <= 3; ++j) worst = std::max(worst, power_matching_residual(s, j, 50, 20240611));
  report(7, "power matching j=0..3, 50 samples", worst <= 1e-9, "max scaled residual " + fmt("%.2e", worst) + " <= 1e-9");
}

void criterion_8(const DiscretizationPtr& d, const ExpansionSeries& s) {
  const double r = galerkin_projection_ratio(*d, s.characteristics, 10, 20240611);
  report(8, "Galerkin projection bound, 10 samples", r <= 1.0 + 1e-12,
         "max |P w|/|w| in H1(D0) = " + fmt("%.6f", r) + " <= 1 + 1e-12");
}

void criterion_9() {
  const auto d = make_discretization(fixtures::problem(16, fixtures::zero(), rigid_motion(0.3, -0.7, 0.4, {0.2, 0.6})));
  const FeFunction motion = interpolate(d->space(), d->data().boundary);
  const ExpansionSeries s = build_series(d, 4);
  double direct_dev = 0.0, term_max = 0.0, e_max = 0.0;
  for (int j = 1; j <= 4; ++j) term_max = std::max(term_max, fixtures::max_abs(s.terms[static_cast<std::size_t>(j)].u.coefficients()));
  for (double eta : {1.0, 1e3}) {
    const DirectSolution sol = solve_full(*d, eta);
    direct_dev = std::max(direct_dev, fixtures::max_abs(sol.u.coefficients() - motion.coefficients()));
    for (int J = 0; J <= 4; ++J) e_max = std::max(e_max, h1_norm(sol.u - partial_sum(s, eta, J)));
  }
  report(9, "exact terminating case", direct_dev <= 1e-10 && term_max <= 1e-10 && e_max <= 1e-10,
         "|u_eta - g| " + fmt("%.2e", direct_dev) + ", max |u_j>=1| " + fmt("%.2e", term_max) + ", max e_J " +
             fmt("%.2e", e_max) + " (all <= 1e-10)");
}

void criterion_10() {
  const Mesh m = generate_rect_with_inclusion({0, 0, 1, 1}, {0.25, 0.25, 0.75, 0.75}, 16);
  std::stringstream ms;
  save_mesh(m, ms);
  const bool mesh_ok = load_mesh(ms) == m;

  const auto d = fixtures::default_disc(16);
  const ExpansionSeries s = build_series(d, 2);
  bool field_ok = true;
  for (const auto& t : s.terms) {
    std::stringstream fs;
    save_fefield(t.u, fs);
    field_ok = field_ok && load_fefield(fs, d->space()).coefficients() == t.u.coefficients();
  }

  const auto base = std::filesystem::temp_directory_path() / "hce_acceptance_determinism";
  std::filesystem::remove_all(base);
  const StudyConfig cfg;
  emit_report(run_study(cfg), (base / "a").string());
  emit_report(run_study(cfg), (base / "b").string());
  bool study_ok = true;
  for (const char* f : {"errors.csv", "terms.csv", "rates.csv", "invariants.csv", "summary.csv", "convergence.svg"})
    study_ok = study_ok && slurp(base / "a" / f) == slurp(base / "b" / f) && !slurp(base / "a" / f).empty();
  std::filesystem::remove_all(base);
  report(10, "determinism and round trips", mesh_ok && field_ok && study_ok,
         std::string("mesh ") + (mesh_ok ? "exact" : "differs") + ", fields " + (field_ok ? "exact" : "differ") +
             ", repeated study " + (study_ok ? "bit-identical" : "differs"));
}

}  // namespace

int main() {
  try {
    const auto d = fixtures::default_disc(16);
    const ExpansionSeries s = build_series(d, 5);
    criterion_1(d, s);
    criterion_2(d, s);
    criterion_3(d, s);
    criterion_4(d, s);
    criterion_5(s);
    criterion_6(d, s);
    criterion_7(s);
    criterion_8(d, s);
    criterion_9();
    criterion_10();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance run aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return failures ? 1 : 0;
}
