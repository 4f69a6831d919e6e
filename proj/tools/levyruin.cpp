#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "levyruin/config.hpp"
#include "levyruin/error.hpp"
#include "levyruin/parallel.hpp"
#include "levyruin/pipeline.hpp"

namespace {

using namespace levyruin;

struct Options {
  std::string config;
  std::string out = "levyruin_out";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  bool dump_matrices = false;
  std::string spectral_json;
  std::string mc_json;
};

RunConfig load(const Options& o) {
  if (o.config.empty()) throw Error(ErrorKind::Config, "--config is required");
  RunConfig c = load_config(o.config);
  if (o.seed) c.mc.seed = o.seed;
  return c;
}

void print_checks(const Pipeline& p) {
  for (const auto& c : p.checks()) {
    std::printf("%-5s %-10s %-40s value=%.6g %s %.6g\n", c.pass ? "PASS" : "FAIL", c.stage.c_str(), c.name.c_str(),
                c.value, c.relation.c_str(), c.tolerance);
  }
}

void print_comparison(const ComparisonReport& r) {
  for (const auto& e : r.entries) {
    std::printf("%-5s %-26s spectral=%.8g mc=%.8g deviation=%.4g tolerance=%.4g [%s]\n", e.pass ? "PASS" : "FAIL",
                e.name.c_str(), e.spectral, e.mc, e.deviation, e.tolerance, e.units.c_str());
  }
}

// Runs one stage through the pipeline, keeping the manifest on failure.
template <class Stage>
int run_stage(const Options& o, bool needs_mc, Stage&& stage) {
  RunConfig c = load(o);
  if (needs_mc) c.stages.mc = true;
  Pipeline p(std::move(c), o.out, o.dump_matrices);
  try {
    stage(p);
  } catch (const std::exception& e) {
    p.set_failure(e.what());
    p.write_manifest();
    throw;
  }
  p.write_manifest();
  print_checks(p);
  return p.checks_pass() ? 0 : 1;
}

int dispatch(CLI::App& app, const Options& o) {
  if (app.got_subcommand("classify")) {
    return run_stage(o, false, [](Pipeline& p) {
      const auto& v = p.classify();
      std::printf("type=%s support=%s symmetric=%s\n", to_string(v.type).c_str(), to_string(v.support.kind).c_str(),
                  v.symmetric ? "yes" : "no");
      for (const auto& w : v.warnings) std::printf("warning: %s\n", w.c_str());
      for (const auto& w : v.violations) std::printf("violation: %s\n", w.c_str());
    });
  }
  if (app.got_subcommand("kernel-table")) {
    return run_stage(o, false, [](Pipeline& p) {
      const auto& k = p.kernel();
      std::printf("cells=%zu h=%.6g symbol_residual=%.3e\n", k.table.cell_avg.size(), k.table.h,
                  k.symbol.max_residual);
    });
  }
  if (app.got_subcommand("assemble")) {
    return run_stage(o, false, [](Pipeline& p) {
      const auto& ops = p.assemble();
      std::printf("unknowns=%zu residual=%.3e\n", ops.grid.unknown_count(), ops.residual);
    });
  }
  if (app.got_subcommand("eigen")) {
    return run_stage(o, false, [](Pipeline& p) {
      const auto& e = p.eigen();
      std::printf("lambda1=%.10g c1=%.8g disk_margin=%.3e sector_angle=%.6g\n", e.eigen.lambda1,
                  e.asymptotics.coefficient, e.leading.disk_margin, e.leading.sector_angle);
    });
  }
  if (app.got_subcommand("survival")) {
    return run_stage(o, false, [](Pipeline& p) {
      const auto& c = p.survival();
      if (c.fit) std::printf("fitted_rate=%.8g stderr=%.3e\n", c.fit->rate, c.fit->standard_error);
    });
  }
  if (app.got_subcommand("laplace")) {
    return run_stage(o, false, [](Pipeline& p) {
      const auto& l = p.laplace();
      for (std::size_t k = 0; k < l.s.size(); ++k) std::printf("s=%g value=%.10g\n", l.s[k], l.resolvent[k]);
    });
  }
  if (app.got_subcommand("mc-survival") || app.got_subcommand("mc-occupation")) {
    return run_stage(o, true, [](Pipeline& p) {
      const auto& m = p.mc();
      std::printf("paths=%zu method=%s mean_exit_time=%.8g\n", m.exits.n_paths, m.exits.method.c_str(),
                  m.occupation.mean_exit_time);
      if (m.fit) std::printf("fitted_rate=%.8g stderr=%.3e\n", m.fit->rate, m.fit->standard_error);
    });
  }
  if (app.got_subcommand("compare")) {
    if (!o.spectral_json.empty() || !o.mc_json.empty()) {
      if (o.spectral_json.empty() || o.mc_json.empty()) {
        throw Error(ErrorKind::Config, "--spectral and --mc must be given together");
      }
      const Tolerances tol = o.config.empty() ? Tolerances{} : load(o).tolerances;
      const auto report = compare(load_spectral_side(o.spectral_json), load_mc_side(o.mc_json), tol);
      print_comparison(report);
      return report.pass() ? 0 : 1;
    }
    return run_stage(o, true, [](Pipeline& p) { print_comparison(p.compare()); });
  }
  // run
  Pipeline p(load(o), o.out, o.dump_matrices);
  const int status = p.run();
  print_checks(p);
  std::printf("status=%d\n", status);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Survival probabilities of Levy processes in bounded domains"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Run configuration (INI)");
  app.add_option("--out", o.out, "Output directory for artifacts");
  app.add_option("--threads", o.threads, "Worker threads (default: LEVYRUIN_THREADS or 1)");
  app.add_option("--seed", o.seed, "Monte Carlo seed, overriding mc.seed");

  app.add_subcommand("classify", "Classify the triplet and check the domain against its support");
  app.add_subcommand("kernel-table", "Tabulate the convolution kernel and run the symbol check");
  app.add_subcommand("assemble", "Assemble S, L and the quasi-potential B")
      ->add_flag("--dump-matrices", o.dump_matrices, "Also write S.csv, L.csv and B.csv");
  app.add_subcommand("eigen", "Principal eigenpair, leading spectrum and asymptotic coefficient");
  app.add_subcommand("survival", "Survival curve from the killed semigroup");
  app.add_subcommand("laplace", "Laplace transform of the survival probability");
  app.add_subcommand("mc-survival", "Monte Carlo survival curve");
  app.add_subcommand("mc-occupation", "Monte Carlo occupation histogram");
  auto* cmp = app.add_subcommand("compare", "Compare spectral and Monte Carlo results");
  cmp->add_option("--spectral", o.spectral_json, "eigen.json from an earlier run");
  cmp->add_option("--mc", o.mc_json, "mc.json from an earlier run");
  app.add_subcommand("run", "Run every enabled stage and write the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_thread_count(o.threads);
  try {
    return dispatch(app, o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
