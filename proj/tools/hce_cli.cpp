// hce: high-contrast expansion driver.
//
//   hce --verb study --config default.cfg --out out/
//
// Exit status: 0 when every requested check passes, 1 when a check fails,
// 2 on configuration, input or solver errors.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "hce/config.hpp"
#include "hce/errors.hpp"
#include "hce/field_io.hpp"
#include "hce/study.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out;
  std::string verb = "study";
  std::vector<double> etas;
  int jmax = -1;
  bool quiet = false;
};

std::ostream& log_stream(const Options& o) {
  static std::ostream null(nullptr);
  return o.quiet ? null : std::cout;
}

int print_checks(const std::vector<hce::InvariantRecord>& checks, std::ostream& log) {
  int failed = 0;
  for (const auto& c : checks) {
    const char* status = c.pass ? "pass" : c.soft ? "soft-fail" : "FAIL";
    if (!c.pass && !c.soft) ++failed;
    log << status << "  " << c.name << "  value=" << c.value << "  tol=" << c.tol;
    if (!c.note.empty()) log << "  (" << c.note << ")";
    log << '\n';
  }
  return failed;
}

int run_mesh(const hce::StudyConfig& cfg, std::ostream& log) {
  const hce::ProblemData data = hce::build_problem(cfg);
  const hce::Mesh& mesh = *data.mesh;
  const hce::ValidationReport report = hce::validate(mesh);
  log << "vertices " << mesh.vertices.size() << ", triangles " << mesh.triangles.size() << ", boundary edges "
      << mesh.boundary_edges.size() << ", h " << mesh.h << '\n';
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = (std::filesystem::path(cfg.output_dir) / "mesh.txt").string();
  hce::save_mesh_file(mesh, path);
  log << "wrote " << path << '\n';
  if (!report.ok()) {
    std::cerr << "invalid mesh: " << report.summary() << '\n';
    return 1;
  }
  log << "mesh valid\n";
  return 0;
}

int run_solve(const hce::StudyConfig& cfg, std::ostream& log) {
  const auto disc = hce::make_discretization(hce::build_problem(cfg));
  std::filesystem::create_directories(cfg.output_dir);
  int failed = 0;
  for (std::size_t i = 0; i < cfg.etas.size(); ++i) {
    const hce::DirectSolution sol = hce::solve_full(*disc, cfg.etas[i]);
    const auto path = (std::filesystem::path(cfg.output_dir) / ("u_eta_" + std::to_string(i) + ".fefield")).string();
    hce::save_fefield_file(sol.u, path);
    const bool ok = sol.stats.relative_residual <= cfg.solver_tol;
    if (!ok) ++failed;
    log << "eta " << sol.eta << ": " << sol.stats.method << ", residual " << sol.stats.relative_residual
        << ", |u|_H1 " << hce::h1_norm(sol.u) << ", rigidity gap " << hce::inclusion_rigidity_gap(sol, *disc)
        << (ok ? "" : "  FAIL") << " -> " << path << '\n';
  }
  return failed ? 1 : 0;
}

int run_expand(const hce::StudyConfig& cfg, std::ostream& log) {
  const auto disc = hce::make_discretization(hce::build_problem(cfg));
  const hce::ExpansionSeries series = hce::build_series(disc, cfg.jmax, cfg.compatibility_tol);
  const auto dir = (std::filesystem::path(cfg.output_dir) / "series").string();
  hce::export_series(series, dir);
  for (const auto& t : series.terms)
    log << "u_" << t.j << ": |u|_H1 " << hce::h1_norm(t.u) << ", c = (" << t.c[0] << ", " << t.c[1] << ", " << t.c[2]
        << ")\n";
  log << "wrote " << dir << '\n';
  return print_checks(series.checks, log) ? 1 : 0;
}

int run_check(const hce::StudyConfig& cfg, std::ostream& log) {
  const auto disc = hce::make_discretization(hce::build_problem(cfg));
  const hce::ExpansionSeries series = hce::build_series(disc, cfg.jmax, cfg.compatibility_tol);
  return print_checks(hce::expansion_invariants(series), log) ? 1 : 0;
}

int run_study_verb(const hce::StudyConfig& cfg, std::ostream& log) {
  const hce::StudyReport report = hce::run_study(cfg);
  hce::emit_report(report, cfg.output_dir);
  for (const auto& row : report.rates) {
    log << "J=" << row.J << ": ";
    if (row.exact) log << "exact";
    else if (row.fit) log << "slope " << row.fit->slope << ", r2 " << row.fit->r2;
    else log << "no fit";
    if (!row.note.empty()) log << " (" << row.note << ")";
    log << '\n';
  }
  log << "C_hat: " << report.c_hat_note << '\n';
  const int failed = print_checks(report.invariants, log);
  for (const auto& c : report.cells)
    if (!c.solved) std::cerr << "eta " << c.eta << " J " << c.J << ": " << c.message << '\n';
  log << "wrote " << cfg.output_dir << '\n';
  return failed || !report.all_pass() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-contrast inclusion expansion: series construction, direct solves and convergence studies"};
  Options o;
  app.add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory (overrides output.dir)");
  app.add_option("--verb", o.verb, "mesh | solve | expand | study | check")
      ->check(CLI::IsMember({"mesh", "solve", "expand", "study", "check"}));
  app.add_option("--eta", o.etas, "contrast value(s), overrides study.eta");
  app.add_option("--jmax", o.jmax, "highest series index, overrides study.jmax");
  app.add_flag("--quiet", o.quiet, "no progress output");
  CLI11_PARSE(app, argc, argv);

  std::ostream& log = log_stream(o);
  try {
    hce::StudyConfig cfg = o.config_path.empty() ? hce::StudyConfig{} : hce::load_config_file(o.config_path);
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.etas.empty()) cfg.etas = o.etas;
    if (o.jmax >= 0) cfg.jmax = o.jmax;
    else if (app.count("--jmax")) throw hce::ConfigError("--jmax", "needs jmax >= 0");
    cfg.validate();

    if (o.verb == "mesh") return run_mesh(cfg, log);
    if (o.verb == "solve") return run_solve(cfg, log);
    if (o.verb == "expand") return run_expand(cfg, log);
    if (o.verb == "check") return run_check(cfg, log);
    return run_study_verb(cfg, log);
  } catch (const hce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const hce::ParseError& e) {
    std::cerr << "parse error (line " << e.line() << "): " << e.what() << '\n';
  } catch (const hce::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 2;
}
