// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "levyruin/config.hpp"
#include "levyruin/kernel.hpp"
#include "levyruin/levy_models.hpp"
#include "levyruin/montecarlo.hpp"
#include "levyruin/operator.hpp"
#include "levyruin/parallel.hpp"
#include "levyruin/pipeline.hpp"
#include "levyruin/spectral_survival.hpp"

using namespace levyruin;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const Domain kUnit({{-1.0, 1.0}});

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("levyruin_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

const OperatorSet& brownian_ops() {
  static const OperatorSet ops = build_operators(LevyTriplet(1.0, 0.0, BrownianFamily{}), kUnit, 200.0);
  return ops;
}

Outcome brownian_eigenvalue() {
  const auto& ops = brownian_ops();
  const double lambda1 = principal_eigenpair(ops.B).lambda1;
  // Dirichlet problem for f''/2 on [-1, 1]: smallest eigenvalue pi^2/8 of -L.
  const double exact = 8.0 / (pi * pi);
  const double rel = std::abs(lambda1 - exact) / exact;
  return {rel <= 0.01, format("lambda1=%.8f oracle=%.8f rel=%.2e (<= 1e-2)", lambda1, exact, rel)};
}

Outcome brownian_asymptotics() {
  const auto& ops = brownian_ops();
  const EigenResult e = principal_eigenpair(ops.B);
  const double c1 = asymptotics(ops.grid, e, 0.0).coefficient;
  const SurvivalCurve curve = survival_curve(ops.grid, ops.L, 0.0, uniform_times(0.02, 500));
  const RateFit fit = fit_log_survival(curve.times, curve.values, 1e-4, 1e-1);
  // Heat series p(t) = sum 4/pi (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 t/8): leading term.
  const double c_exact = 4.0 / pi, slope_exact = -pi * pi / 8.0;
  const double c_rel = std::abs(c1 - c_exact) / c_exact;
  const double s_rel = std::abs(-fit.rate - slope_exact) / std::abs(slope_exact);
  return {c_rel <= 0.02 && s_rel <= 0.005,
          format("c1=%.6f rel=%.2e (<= 2e-2); slope=%.6f rel=%.2e (<= 5e-3)", c1, c_rel, -fit.rate, s_rel)};
}

Outcome brownian_green() {
  const auto& ops = brownian_ops();
  const double h = ops.grid.step(0);
  double worst = 0.0;
  for (std::size_t i = 0; i < ops.grid.unknown_count(); ++i) {
    for (std::size_t j = 0; j < ops.grid.unknown_count(); ++j) {
      const double x = ops.grid.unknown_position(i), y = ops.grid.unknown_position(j);
      const double g = (1.0 + std::min(x, y)) * (1.0 - std::max(x, y));
      const double b = ops.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / h;
      worst = std::max(worst, std::abs(b - g) / g);
    }
  }
  const auto centre = static_cast<Eigen::Index>(*ops.grid.nearest_unknown(0.0));
  const double row = ops.B.row(centre).sum();
  const bool pass = worst <= 0.01 && std::abs(row - 1.0) <= 0.01;
  return {pass, format("max rel err=%.2e (<= 1e-2); (B 1)(0)=%.8f (1 +- 1e-2)", worst, row)};
}

// sup |L f - (-f' + f(x+1) - f(x))| over the unknowns for a Gaussian bump.
double poisson_identity_error(double resolution) {
  const LevyTriplet t(0.0, -1.0, PoissonFamily{1.0, 1.0});
  const OperatorSet ops = build_operators(t, Domain({{-2.0, 2.0}}), resolution);
  const double w = 0.2;
  auto f = [&](double x) { return std::exp(-(x / w) * (x / w)); };
  auto df = [&](double x) { return -2.0 * x / (w * w) * f(x); };
  Vector fv(static_cast<Eigen::Index>(ops.grid.unknown_count()));
  for (std::size_t i = 0; i < ops.grid.unknown_count(); ++i) fv(static_cast<Eigen::Index>(i)) = f(ops.grid.unknown_position(i));
  const Vector Lf = ops.L * fv;
  double err = 0.0;
  for (std::size_t i = 0; i < ops.grid.unknown_count(); ++i) {
    const double x = ops.grid.unknown_position(i);
    const double exact = -df(x) + (x + 1.0 < 2.0 ? f(x + 1.0) : 0.0) - f(x);
    err = std::max(err, std::abs(Lf(static_cast<Eigen::Index>(i)) - exact));
  }
  return err;
}

Outcome poisson_identity() {
  const double e1 = poisson_identity_error(25.0);
  const double e2 = poisson_identity_error(50.0);
  const double e3 = poisson_identity_error(100.0);
  // sup-error <= C h: each halving must at least halve the error (10% slack for the constant).
  const bool pass = e2 <= 0.55 * e1 && e3 <= 0.55 * e2;
  return {pass, format("errors %.3e, %.3e, %.3e; ratios %.3f, %.3f (<= 0.55)", e1, e2, e3, e2 / e1, e3 / e2)};
}

Outcome kernel_suite() {
  bool pass = true;
  std::string failures;
  double worst_residual = 0.0, worst_margin = 1.0;
  for (const auto& b : builtin_triplets()) {
    if (classify_type(b.triplet) != ProcessType::TypeII) continue;
    for (const auto& c : check_kernel_properties(b.triplet, 1.0).checks) {
      if (!c.pass) {
        pass = false;
        failures += " " + b.name + ":" + c.name;
      }
    }
    const auto report = kernel_symbol_check(b.triplet, make_kernel(b.triplet, 1.0), 1e-3, default_symbol_frequencies());
    worst_residual = std::max(worst_residual, report.max_residual);
    worst_margin = std::min(worst_margin, report.positivity_margin);
    if (report.max_residual > 1e-3 || report.positivity_margin < -1e-8) {
      pass = false;
      failures += " " + b.name + ":symbol";
    }
  }
  return {pass, format("max symbol residual=%.2e (<= 1e-3); min positivity margin=%.2e (>= -1e-8)%s", worst_residual,
                       worst_margin, failures.empty() ? "" : ("; failed:" + failures).c_str())};
}

Outcome cauchy_cross_oracle() {
  RunConfig c = parse_config(
      "family = cauchy\ndomain = [-1,1]\nx0 = 0\nresolution = 400\n"
      "[mc]\npaths = 100000\ndt = 1e-4\nhorizon = 20\nseed = 20261016\nbins = 8\n"
      "[stages]\nmc = on\ncompare = on\n");
  Pipeline p(c, scratch("cauchy"));
  const ComparisonReport r = p.compare();
  bool pass = true;
  std::string detail;
  for (const auto& e : r.entries) {
    if (e.name != "decay_rate" && e.name != "occupation_max_deviation") continue;
    pass = pass && e.pass;
    detail += format("%s%s: spectral=%.6g mc=%.6g dev=%.4g tol=%.4g", detail.empty() ? "" : "; ", e.name.c_str(),
                     e.spectral, e.mc, e.deviation, e.tolerance);
  }
  return {pass && !detail.empty(), detail};
}

Outcome erlang_oracle() {
  const PathScheme scheme{LevyTriplet(0.0, 0.0, PoissonFamily{1.0, 1.0}), 1e-3, 1e-3, 20261017, false};
  const auto c = estimate_survival(scheme, 0.0, Domain({{-0.5, 1.5}}), {0.0, 1.0}, 100000);
  // Leaving [-0.5, 1.5] from 0 takes two unit jumps: p(1) = P(N_1 <= 1) = 2/e.
  const double exact = 2.0 / std::numbers::e;
  const bool pass = c.ci_lo[1] <= exact && exact <= c.ci_hi[1];
  return {pass, format("p(1)=%.5f CI=[%.5f, %.5f] oracle=%.5f", c.p_hat[1], c.ci_lo[1], c.ci_hi[1], exact)};
}

Outcome spectral_structure() {
  bool pass = true;
  std::string detail;
  for (const auto& b : builtin_triplets()) {
    if (classify_type(b.triplet) != ProcessType::TypeII || support_of(b.triplet).kind != SupportKind::FullLine) continue;
    const OperatorSet ops = build_operators(b.triplet, kUnit, 200.0);
    const double lambda1 = principal_eigenpair(ops.B).lambda1;
    const LeadingSpectrum s = leading_spectrum(ops.B, 10, lambda1);
    bool ok = disk_contains(s, lambda1, 1e-6) && !s.values.empty();
    std::string line = format("%s margin=%.1e", b.name.c_str(), s.disk_margin / (0.5 * lambda1));
    if (is_symmetric(b.triplet)) {
      double imag = 0.0;
      for (const auto& v : s.values) imag = std::max(imag, std::abs(v.value.imag()));
      const double asym = (ops.B - ops.B.transpose()).cwiseAbs().maxCoeff() / ops.B.cwiseAbs().maxCoeff();
      ok = ok && imag <= 1e-8 * lambda1 && asym <= 1e-8;
      line += format(" im=%.1e asym=%.1e", imag / lambda1, asym);
    }
    if (!ok) line += " FAILED";
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + line;
  }
  return {pass, detail};
}

Outcome laplace_consistency() {
  bool pass = true;
  std::string detail;
  for (const char* family : {"brownian\nA = 1", "cauchy"}) {
    const std::string name = std::string(family).substr(0, std::string(family).find('\n'));
    RunConfig c = parse_config(std::string("family = ") + family + "\ndomain = [-1,1]\nx0 = 0\nresolution = 200\n");
    Pipeline p(c, scratch("laplace_" + name));
    const LaplaceStage& l = p.laplace();
    double worst = 0.0;
    bool exact_row_sum = true;
    for (std::size_t k = 0; k < l.s.size(); ++k) {
      worst = std::max(worst, std::abs(l.resolvent[k] - l.from_curve[k]) / std::abs(l.from_curve[k]));
      if (l.s[k] == 0.0) exact_row_sum = exact_row_sum && l.resolvent[k] == l.row_sum;
    }
    const bool ok = worst <= 1e-3 && exact_row_sum && l.s.size() == 4;
    pass = pass && ok;
    detail += format("%s%s: max rel=%.2e (<= 1e-3), s=0 equals row sum: %s", detail.empty() ? "" : "; ", name.c_str(),
                     worst, exact_row_sum ? "yes" : "no");
  }
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const std::string text =
      "family = stable\ndomain = [-1,0.5]\nx0 = 0\nresolution = 100\n[params]\nalpha = 1.5\nskew = 0.5\n"
      "[mc]\npaths = 4000\ndt = 1e-3\nhorizon = 20\nseed = 20261018\n[stages]\nmc = on\ncompare = on\n";
  std::vector<fs::path> dirs{scratch("determinism_a"), scratch("determinism_b")};
  set_thread_count(2);
  for (const auto& d : dirs) {
    Pipeline p(parse_config(text), d);
    p.run();
  }
  set_thread_count(0);
  std::set<std::string> names;
  for (const auto& d : dirs) {
    for (const auto& f : fs::directory_iterator(d)) names.insert(f.path().filename().string());
  }
  std::size_t compared = 0;
  std::string differing;
  for (const auto& n : names) {
    const auto ext = fs::path(n).extension();
    if (ext != ".csv" && ext != ".json") continue;
    ++compared;
    if (!fs::exists(dirs[0] / n) || !fs::exists(dirs[1] / n) || slurp(dirs[0] / n) != slurp(dirs[1] / n)) {
      differing += " " + n;
    }
  }
  return {differing.empty() && compared >= 10,
          format("%zu artifacts compared at 2 threads%s", compared,
                 differing.empty() ? ", all identical" : (", differing:" + differing).c_str())};
}

struct Criterion {
  int id;
  const char* title;
  double time_limit;  // seconds, 0 when the criterion sets none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Brownian eigenvalue", 10.0, brownian_eigenvalue},
      {2, "Brownian asymptotic coefficient and decay slope", 30.0, brownian_asymptotics},
      {3, "Brownian quasi-potential kernel", 0.0, brownian_green},
      {4, "Poisson generator identity", 5.0, poisson_identity},
      {5, "kernel property suite", 60.0, kernel_suite},
      {6, "Cauchy spectral/Monte Carlo cross-check", 300.0, cauchy_cross_oracle},
      {7, "Erlang Monte Carlo oracle", 60.0, erlang_oracle},
      {8, "spectral structure", 0.0, spectral_structure},
      {9, "Laplace consistency", 0.0, laplace_consistency},
      {10, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = format("%.1fs", seconds);
    if (c.time_limit > 0.0) {
      timing += format(" (limit %.0fs)", c.time_limit);
      if (seconds > c.time_limit) o.pass = false;
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s: %s | %s | %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
