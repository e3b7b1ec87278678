#include "hce/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "hce/errors.hpp"
#include "text_util.hpp"

namespace hce {

using detail::format_double;

RateFit fit_rate(const std::vector<double>& etas, const std::vector<double>& errors, double zero_tol) {
  if (etas.size() != errors.size()) throw FitError("one error per eta required");
  RateFit fit;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0)) throw FitError("eta values must be > 0");
    if (!std::isfinite(errors[i]) || errors[i] < 0.0) throw FitError("errors must be finite and >= 0");
    if (errors[i] <= zero_tol) {
      fit.excluded.push_back(i);
      continue;
    }
    xs.push_back(std::log(etas[i]));
    ys.push_back(std::log(errors[i]));
  }
  if (xs.size() < 2) {
    if (xs.empty() && !etas.empty()) throw FitError("all errors are zero (exact)");
    throw FitError("need at least two positive errors to fit a rate");
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("eta values of the positive errors are all equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

double estimate_C(const std::vector<double>& norms, double zero_rel) {
  double scale = 0.0;
  for (double v : norms) {
    if (!std::isfinite(v) || v < 0.0) throw UsageError("term norms must be finite and >= 0");
    scale = std::max(scale, v);
  }
  const double floor = zero_rel * scale;
  bool found = false;
  double c = 0.0;
  for (std::size_t j = 1; j + 1 < norms.size(); ++j) {
    if (norms[j] <= floor || norms[j + 1] <= floor) continue;
    c = std::max(c, norms[j + 1] / norms[j]);
    found = true;
  }
  if (!found) throw UsageError("C_hat needs two consecutive nonzero term norms with j >= 1");
  return c;
}

bool StudyReport::all_pass() const {
  if (!all_hard_pass(invariants)) return false;
  return std::all_of(cells.begin(), cells.end(), [](const ErrorCell& c) { return c.solved; });
}

const ErrorCell& StudyReport::cell(std::size_t eta_index, int J) const {
  return cells.at(eta_index * static_cast<std::size_t>(config.jmax + 1) + static_cast<std::size_t>(J));
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  StudyReport report;
  report.config = config;
  const DiscretizationPtr disc = make_discretization(build_problem(config));
  const ExpansionSeries series = build_series(disc, config.jmax, config.compatibility_tol);
  report.invariants = expansion_invariants(series);

  for (const auto& t : series.terms) {
    report.term_norms.push_back(h1_norm(t.u));
    report.term_coefficients.push_back(t.c);
  }
  try {
    report.c_hat = estimate_C(report.term_norms);
    report.c_hat_note = "expansion reliable for eta >> " + format_double(*report.c_hat);
  } catch (const UsageError& e) {
    report.c_hat_note = std::string("not estimated: ") + e.what() + " (terminating or too short series)";
  }

  for (double eta : config.etas) {
    std::optional<DirectSolution> sol;
    std::string failure;
    try {
      sol = solve_full(*disc, eta);
    } catch (const SolveError& e) {
      failure = e.what();
    }
    const std::string tag = "direct[eta=" + format_double(eta) + "]";
    if (!failure.empty()) {
      report.direct.push_back({});
      report.invariants.push_back({tag + ".solve", std::numeric_limits<double>::quiet_NaN(), config.solver_tol,
                                   false, false, failure});
      for (int J = 0; J <= config.jmax; ++J) report.cells.push_back({eta, J, 0.0, 0.0, false, false, failure});
      continue;
    }
    report.direct.push_back(sol->stats);
    report.invariants.push_back(check_le(tag + ".residual", sol->stats.relative_residual, config.solver_tol));
    const double denom = h1_norm(sol->u);
    for (int J = 0; J <= config.jmax; ++J) {
      const double e_abs = h1_norm(sol->u - partial_sum(series, eta, J));
      double e_rel = 0.0;
      if (denom > 0.0) e_rel = e_abs / denom;
      else if (e_abs > 0.0) e_rel = std::numeric_limits<double>::infinity();
      report.cells.push_back({eta, J, e_abs, e_rel, true, e_abs == 0.0 || e_rel <= kExactRelError, {}});
    }
  }

  for (int J = 0; J <= config.jmax; ++J) {
    RateRow row{J, std::nullopt, false, {}};
    std::vector<double> etas, errors;
    for (std::size_t i = 0; i < config.etas.size(); ++i) {
      const ErrorCell& c = report.cell(i, J);
      if (!c.solved) continue;
      etas.push_back(c.eta);
      errors.push_back(c.exact ? 0.0 : c.e_abs);
    }
    const bool all_zero =
        !errors.empty() && std::all_of(errors.begin(), errors.end(), [](double e) { return e == 0.0; });
    if (all_zero) {
      row.exact = true;
      row.note = "all errors zero";
    } else {
      try {
        row.fit = fit_rate(etas, errors);
        if (!row.fit->excluded.empty()) {
          row.note = "zero error excluded at eta =";
          for (auto k : row.fit->excluded) row.note += " " + format_double(etas[k]);
        }
      } catch (const FitError& e) {
        row.note = e.what();
      }
    }
    report.rates.push_back(std::move(row));
  }

  // Soft: e_{J+1} <= e_J at the largest eta.
  if (config.jmax >= 1) {
    const auto imax = static_cast<std::size_t>(
        std::max_element(config.etas.begin(), config.etas.end()) - config.etas.begin());
    double worst = 0.0;
    bool solved = true;
    for (int J = 0; J < config.jmax; ++J) {
      const ErrorCell& a = report.cell(imax, J);
      const ErrorCell& b = report.cell(imax, J + 1);
      solved = solved && a.solved && b.solved;
      if (b.exact) continue;
      worst = std::max(worst, a.exact ? std::numeric_limits<double>::infinity() : b.e_abs / a.e_abs);
    }
    InvariantRecord rec{"error_monotone_in_J[eta_max]", worst, 1.0, solved && worst <= 1.0, true, {}};
    if (!rec.pass) {
      rec.note = "e_{J+1} > e_J at eta = " + format_double(config.etas[imax]);
      if (report.c_hat) rec.note += "; expected only for eta >> C_hat = " + format_double(*report.c_hat);
    }
    report.invariants.push_back(std::move(rec));
  }
  return report;
}

namespace {

std::string fixed(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw Error("write failed: " + p.string());
}

std::string csv_text(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

void write_svg(const StudyReport& r, const std::filesystem::path& p) {
  constexpr double W = 640, H = 480, L = 70, R = 130, T = 30, B = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& c : r.cells) {
    xmin = std::min(xmin, std::log10(c.eta));
    xmax = std::max(xmax, std::log10(c.eta));
    if (c.solved && !c.exact && c.e_abs > 0.0) {
      ymin = std::min(ymin, std::log10(c.e_abs));
      ymax = std::max(ymax, std::log10(c.e_abs));
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (!std::isfinite(ymin)) ymin = -16.0, ymax = 0.0;
  xmin = std::floor(xmin), xmax = std::ceil(xmax);
  ymin = std::floor(ymin), ymax = std::ceil(ymax);
  if (xmax <= xmin) xmin -= 1.0, xmax += 1.0;
  if (ymax <= ymin) ymin -= 1.0, ymax += 1.0;
  const auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  const auto py = [&](double ly) { return T + (ymax - ly) / (ymax - ymin) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  auto out = open_out(p);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
      << W << ' ' << H << "\">\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = xmin; d <= xmax; d += 1.0)
    out << "<text x=\"" << fixed(px(d)) << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" text-anchor=\"middle\">1e"
        << static_cast<int>(d) << "</text>\n";
  const double ystep = std::max(1.0, std::ceil((ymax - ymin) / 10.0));
  for (double d = ymin; d <= ymax; d += ystep)
    out << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(d) + 4) << "\" font-size=\"11\" text-anchor=\"end\">1e"
        << static_cast<int>(d) << "</text>\n";
  out << "<text x=\"" << fixed((L + W - R) / 2) << "\" y=\"" << H - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">eta</text>\n";
  out << "<text x=\"16\" y=\"" << fixed((T + H - B) / 2) << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fixed((T + H - B) / 2) << ")\">e_J (H1)</text>\n";
  const std::size_t ne = r.config.etas.size();
  for (int J = 0; J <= r.config.jmax; ++J) {
    const char* color = colors[static_cast<std::size_t>(J) % 10];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < ne; ++i) {
      const ErrorCell& c = r.cell(i, J);
      if (c.solved && !c.exact && c.e_abs > 0.0) pts.emplace_back(std::log10(c.eta), std::log10(c.e_abs));
    }
    std::sort(pts.begin(), pts.end());
    out << "<polyline class=\"J" << J << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k)
      out << (k ? " " : "") << fixed(px(pts[k].first)) << ',' << fixed(py(pts[k].second));
    out << "\"/>\n";
    out << "<text x=\"" << W - R + 12 << "\" y=\"" << T + 16 * (J + 1) << "\" font-size=\"11\" fill=\"" << color
        << "\">J = " << J << "</text>\n";
  }
  out << "</svg>\n";
  finish(out, p);
}

}  // namespace

void emit_report(const StudyReport& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);

  {
    const auto p = base / "errors.csv";
    auto out = open_out(p);
    out << "eta,J,e_abs,e_rel,status\n";
    for (const auto& c : r.cells) {
      out << format_double(c.eta) << ',' << c.J << ',';
      if (c.solved) out << format_double(c.e_abs) << ',' << format_double(c.e_rel) << ',' << (c.exact ? "exact" : "ok");
      else out << "nan,nan," << csv_text("failed: " + c.message);
      out << '\n';
    }
    finish(out, p);
  }
  {
    const auto p = base / "terms.csv";
    auto out = open_out(p);
    out << "j,norm_h1,c1,c2,c3\n";
    for (std::size_t j = 0; j < r.term_norms.size(); ++j) {
      const auto& c = r.term_coefficients[j];
      out << j << ',' << format_double(r.term_norms[j]) << ',' << format_double(c[0]) << ',' << format_double(c[1])
          << ',' << format_double(c[2]) << '\n';
    }
    finish(out, p);
  }
  {
    const auto p = base / "rates.csv";
    auto out = open_out(p);
    out << "J,slope,r2,note\n";
    for (const auto& row : r.rates) {
      out << row.J << ',';
      if (row.exact) out << "exact,exact";
      else if (row.fit) out << format_double(row.fit->slope) << ',' << format_double(row.fit->r2);
      else out << "nan,nan";
      out << ',' << csv_text(row.note) << '\n';
    }
    finish(out, p);
  }
  {
    const auto p = base / "invariants.csv";
    auto out = open_out(p);
    out << "name,value,tol,pass,note\n";
    for (const auto& rec : r.invariants) {
      const char* status = rec.pass ? "pass" : rec.soft ? "soft-fail" : "fail";
      out << csv_text(rec.name) << ',' << format_double(rec.value) << ',' << format_double(rec.tol) << ',' << status
          << ',' << csv_text(rec.note) << '\n';
    }
    finish(out, p);
  }
  {
    const auto p = base / "summary.csv";
    auto out = open_out(p);
    out << "key,value\n";
    out << "c_hat," << (r.c_hat ? format_double(*r.c_hat) : "nan") << '\n';
    out << "c_hat_note," << csv_text(r.c_hat_note) << '\n';
    out << "all_pass," << (r.all_pass() ? "true" : "false") << '\n';
    finish(out, p);
  }
  write_svg(r, base / "convergence.svg");
}

}  // namespace hce
