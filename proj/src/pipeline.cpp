#include "levyruin/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "levyruin/error.hpp"

namespace levyruin {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string format_row(const std::vector<double>& row) {
  std::string line;
  char buf[40];
  for (std::size_t k = 0; k < row.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", row[k]);
    if (k) line += ',';
    line += buf;
  }
  return line;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path.string() + "'");
  out << text;
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::vector<double>>& rows) {
  std::string text = header + "\n";
  for (const auto& row : rows) text += format_row(row) + "\n";
  write_text(path, text);
}

void write_matrix(const fs::path& path, const Matrix& M) {
  std::string text;
  std::vector<double> row(static_cast<std::size_t>(M.cols()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) row[static_cast<std::size_t>(j)] = M(i, j);
    text += format_row(row) + "\n";
  }
  write_text(path, text);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "malformed JSON in '" + path.string() + "': " + e.what());
  }
}

json fit_json(const RateFit& f) {
  return {{"rate", f.rate},
          {"standard_error", f.standard_error},
          {"intercept", f.intercept},
          {"intercept_standard_error", f.intercept_standard_error},
          {"points", f.points}};
}

RateFit fit_from_json(const json& j) {
  RateFit f;
  f.rate = j.at("rate").get<double>();
  f.standard_error = j.at("standard_error").get<double>();
  f.intercept = j.at("intercept").get<double>();
  f.intercept_standard_error = j.at("intercept_standard_error").get<double>();
  f.points = j.at("points").get<std::size_t>();
  return f;
}

json check_json(const Check& c) {
  return {{"stage", c.stage}, {"name", c.name},           {"value", c.value},
          {"tolerance", c.tolerance}, {"relation", c.relation}, {"pass", c.pass}};
}

json comparison_json(const ComparisonReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name},
                       {"spectral", e.spectral},
                       {"mc", e.mc},
                       {"deviation", e.deviation},
                       {"tolerance", e.tolerance},
                       {"units", e.units},
                       {"pass", e.pass}});
  }
  return {{"entries", entries}, {"pass", r.pass()}};
}

json config_json(const RunConfig& c, const Domain& d) {
  return {{"family", c.family},
          {"family_parameters", c.params},
          {"A", c.A},
          {"gamma", c.gamma},
          {"triplet_key", c.triplet_key()},
          {"domain", d.canonical()},
          {"domain_hash", d.hash()},
          {"x0", c.x0},
          {"resolution", c.resolution},
          {"anchor", c.anchor}};
}

const json& units_json() {
  static const json units = {{"lambda1", "time"},
                             {"rate", "1/time"},
                             {"c1", "probability"},
                             {"t", "time"},
                             {"s", "1/time"},
                             {"laplace", "time"},
                             {"occupation", "time"},
                             {"mean_exit_time", "time"},
                             {"angle", "radian"},
                             {"x", "length"}};
  return units;
}

}  // namespace

bool ComparisonReport::pass() const {
  for (const auto& e : entries) {
    if (!e.pass) return false;
  }
  return !entries.empty();
}

ComparisonReport compare(const SpectralSide& spectral, const McSide& mc, const Tolerances& tol) {
  if (spectral.domain_hash != mc.domain_hash) {
    throw Error(ErrorKind::Mismatch, "domain hash differs: " + spectral.domain_hash + " vs " + mc.domain_hash);
  }
  if (spectral.triplet_key != mc.triplet_key) {
    throw Error(ErrorKind::Mismatch, "triplet differs: " + spectral.triplet_key + " vs " + mc.triplet_key);
  }
  if (spectral.x0 != mc.x0) throw Error(ErrorKind::Mismatch, "starting points differ");
  if (spectral.bin_edges != mc.bin_edges) throw Error(ErrorKind::Mismatch, "occupation bins differ");
  if (!(spectral.lambda1 > 0.0)) throw Error(ErrorKind::InvalidArgument, "spectral side has no positive lambda1");

  ComparisonReport r;
  const double rate = 1.0 / spectral.lambda1;
  const double rate_dev = std::abs(rate - mc.fit.rate);
  const double rate_tol = tol.rate_sigmas * mc.fit.standard_error;
  r.entries.push_back({"decay_rate", rate, mc.fit.rate, rate_dev, rate_tol, "1/time", rate_dev <= rate_tol});

  const double c1_mc = std::exp(mc.fit.intercept);
  const double c1_dev = std::abs(spectral.c1 - c1_mc);
  const double c1_tol = tol.rate_sigmas * c1_mc * mc.fit.intercept_standard_error;
  r.entries.push_back({"c1", spectral.c1, c1_mc, c1_dev, c1_tol, "probability", c1_dev <= c1_tol});

  double worst = 0.0, worst_spectral = 0.0, worst_mc = 0.0;
  for (std::size_t k = 0; k < mc.occupation.size(); ++k) {
    const double se = mc.occupation_standard_error[k];
    const double diff = std::abs(spectral.bin_values[k] - mc.occupation[k]);
    const double sigmas = se > 0.0 ? diff / se : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (k == 0 || sigmas > worst) {
      worst = sigmas;
      worst_spectral = spectral.bin_values[k];
      worst_mc = mc.occupation[k];
    }
  }
  r.entries.push_back({"occupation_max_deviation", worst_spectral, worst_mc, worst, tol.occupation_sigmas,
                       "standard errors", worst <= tol.occupation_sigmas});
  return r;
}

SpectralSide load_spectral_side(const fs::path& eigen_json) {
  const json j = read_json(eigen_json);
  try {
    SpectralSide s;
    s.domain_hash = j.at("domain_hash").get<std::string>();
    s.triplet_key = j.at("triplet_key").get<std::string>();
    s.x0 = j.at("x0").get<double>();
    s.lambda1 = j.at("lambda1").get<double>();
    s.c1 = j.at("c1").get<double>();
    s.bin_edges = j.at("quasi_potential_bins").at("edges").get<std::vector<double>>();
    s.bin_values = j.at("quasi_potential_bins").at("values").get<std::vector<double>>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "incomplete spectral artifact '" + eigen_json.string() + "': " + e.what());
  }
}

McSide load_mc_side(const fs::path& mc_json) {
  const json j = read_json(mc_json);
  try {
    McSide m;
    m.domain_hash = j.at("domain_hash").get<std::string>();
    m.triplet_key = j.at("triplet_key").get<std::string>();
    m.x0 = j.at("x0").get<double>();
    m.paths = j.at("paths").get<std::size_t>();
    if (j.at("fit").is_null()) throw Error(ErrorKind::InvalidArgument, "MC artifact has no decay-rate fit");
    m.fit = fit_from_json(j.at("fit"));
    m.bin_edges = j.at("occupation").at("edges").get<std::vector<double>>();
    m.occupation = j.at("occupation").at("mean").get<std::vector<double>>();
    m.occupation_standard_error = j.at("occupation").at("standard_error").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "incomplete MC artifact '" + mc_json.string() + "': " + e.what());
  }
}

Pipeline::Pipeline(RunConfig config, fs::path out, bool dump_matrices)
    : config_(std::move(config)),
      out_(std::move(out)),
      dump_matrices_(dump_matrices),
      domain_(config_.make_domain()),
      triplet_(config_.triplet()) {
  require_seed(config_);
  std::error_code ec;
  fs::create_directories(out_, ec);
  if (ec || !fs::is_directory(out_)) {
    throw Error(ErrorKind::Config, "cannot create output directory '" + out_.string() + "'");
  }
}

void Pipeline::record(const std::string& file) { artifacts_.push_back(file); }

void Pipeline::add_check(const std::string& stage, const std::string& name, double value, double tolerance,
                         const std::string& relation) {
  bool pass = false;
  if (relation == "<=") pass = value <= tolerance;
  if (relation == ">=") pass = value >= tolerance;
  if (relation == "==") pass = value == tolerance;
  checks_.push_back({stage, name, value, tolerance, relation, pass});
}

bool Pipeline::checks_pass() const {
  for (const auto& c : checks_) {
    if (!c.pass) return false;
  }
  return true;
}

const ValidationReport& Pipeline::classify() {
  if (validation_) return *validation_;
  stage_status_["classify"] = "failed";
  ValidationReport v = validate_problem(triplet_, domain_);
  json j = config_json(config_, domain_);
  j["type"] = to_string(v.type);
  j["support"] = to_string(v.support.kind);
  j["support_offset_rate"] = v.support.offset_rate;
  j["symmetric"] = v.symmetric;
  j["spectral_allowed"] = v.spectral_allowed;
  j["domain_in_support"] = v.domain_in_support;
  j["warnings"] = v.warnings;
  j["violations"] = v.violations;
  write_json(out_ / "classify.json", j);
  record("classify.json");
  stage_status_["classify"] = "ok";
  validation_ = std::move(v);
  return *validation_;
}

void Pipeline::require_spectral() {
  const auto& v = classify();
  if (v.type != ProcessType::TypeII) {
    throw Error(ErrorKind::Gate,
                "type I process: the spectral stages need a type II triplet (A > 0 or a jump measure of "
                "infinite mass); only the Monte Carlo stages apply");
  }
  if (!v.domain_in_support || !v.spectral_allowed) {
    std::string why;
    for (const auto& s : v.violations) why += (why.empty() ? "" : "; ") + s;
    throw Error(ErrorKind::Gate, "type II gate: " + (why.empty() ? std::string("domain outside the support") : why));
  }
}

const KernelStage& Pipeline::kernel() {
  if (kernel_) return *kernel_;
  require_spectral();
  stage_status_["kernel"] = "failed";
  const Grid grid = build_grid(domain_, config_.resolution);
  const UnifiedKernel k = make_kernel(triplet_, config_.anchor);
  KernelStage s{tabulate_kernel(k, grid.pieces().front().h, domain_.span()),
                kernel_symbol_check(triplet_, k, config_.symbol_step, default_symbol_frequencies(),
                                    config_.symbol_radius),
                check_kernel_properties(triplet_, config_.anchor)};

  std::vector<std::vector<double>> rows;
  rows.reserve(s.table.cell_avg.size());
  for (long d = -s.table.half_width; d <= s.table.half_width; ++d) {
    rows.push_back({s.table.u_left(d), s.table.u_right(d), s.table.average(d)});
  }
  write_csv(out_ / "kernel_table.csv", "u_left,u_right,cell_avg", rows);
  record("kernel_table.csv");

  json entries = json::array();
  for (const auto& e : s.symbol.entries) {
    entries.push_back({{"z", e.z},
                       {"transform_re", e.transform.real()},
                       {"transform_im", e.transform.imag()},
                       {"target_re", e.target.real()},
                       {"target_im", e.target.imag()},
                       {"residual", e.residual}});
  }
  json props = json::array();
  for (const auto& p : s.properties.checks) {
    props.push_back({{"name", p.name}, {"value", p.value}, {"tolerance", p.tolerance}, {"pass", p.pass}});
  }
  const json j = {{"triplet_key", config_.triplet_key()},
                  {"table", {{"h", s.table.h},
                             {"half_width", s.table.half_width},
                             {"radius", s.table.radius()},
                             {"A", s.table.A},
                             {"drift_coefficient", s.table.drift_coefficient},
                             {"anchor", s.table.anchor}}},
                  {"symbol_check", {{"h", config_.symbol_step},
                                    {"radius", s.symbol.radius},
                                    {"max_residual", s.symbol.max_residual},
                                    {"positivity_margin", s.symbol.positivity_margin},
                                    {"truncation_change", s.symbol.truncation_change},
                                    {"entries", entries}}},
                  {"properties", props}};
  write_json(out_ / "kernel.json", j);
  record("kernel.json");

  const auto& tol = config_.tolerances;
  add_check("kernel", "symbol_residual", s.symbol.max_residual, tol.symbol_residual, "<=");
  add_check("kernel", "positivity_margin", s.symbol.positivity_margin, tol.positivity, ">=");
  for (const auto& p : s.properties.checks) add_check("kernel", p.name, p.pass ? 1.0 : 0.0, 1.0, "==");
  stage_status_["kernel"] = "ok";
  kernel_ = std::move(s);
  return *kernel_;
}

const OperatorSet& Pipeline::assemble() {
  if (operators_) return *operators_;
  const KernelStage& ks = kernel();
  stage_status_["assemble"] = "failed";
  Grid grid = build_grid(domain_, config_.resolution);
  Matrix S;
  try {
    S = assemble_S(grid, ks.table, triplet_.A());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Coverage) throw;
    S = assemble_S(grid, make_kernel(triplet_, config_.anchor));
  }
  Matrix L = assemble_generator(grid, S);
  QuasiPotential q = quasipotential(L);
  OperatorSet ops{std::move(grid), std::move(S), std::move(L), std::move(q.B), std::move(q.phi_rows),
                  q.residual, q.reciprocal_condition, q.min_entry_ratio};

  const double b_max = ops.B.cwiseAbs().maxCoeff();
  const double asymmetry = (ops.B - ops.B.transpose()).cwiseAbs().maxCoeff() / b_max;
  json pieces = json::array();
  for (const auto& p : ops.grid.pieces()) {
    pieces.push_back({{"lo", p.lo}, {"hi", p.hi}, {"h", p.h}, {"cells", p.cells}});
  }
  const json j = {{"domain", domain_.canonical()},
                  {"domain_hash", domain_.hash()},
                  {"unknowns", ops.grid.unknown_count()},
                  {"midpoints", ops.grid.midpoint_count()},
                  {"pieces", pieces},
                  {"S", {{"rows", ops.S_mid.rows()}, {"cols", ops.S_mid.cols()}}},
                  {"L", {{"rows", ops.L.rows()}, {"cols", ops.L.cols()}}},
                  {"B", {{"rows", ops.B.rows()}, {"cols", ops.B.cols()}}},
                  {"quasi_potential_residual", ops.residual},
                  {"reciprocal_condition", ops.reciprocal_condition},
                  {"min_entry_ratio", ops.min_entry_ratio},
                  {"relative_asymmetry", asymmetry},
                  {"refined", q.refined}};
  write_json(out_ / "assemble.json", j);
  record("assemble.json");
  if (dump_matrices_) {
    write_matrix(out_ / "S.csv", ops.S_mid);
    write_matrix(out_ / "L.csv", ops.L);
    write_matrix(out_ / "B.csv", ops.B);
    record("S.csv");
    record("L.csv");
    record("B.csv");
  }

  const auto& tol = config_.tolerances;
  add_check("assemble", "quasi_potential_residual", ops.residual, tol.quasi_potential_residual, "<=");
  add_check("assemble", "B_nonnegative", ops.min_entry_ratio, tol.positivity, ">=");
  if (classify().symmetric) add_check("assemble", "B_symmetry", asymmetry, tol.symmetry, "<=");
  stage_status_["assemble"] = "ok";
  operators_ = std::move(ops);
  return *operators_;
}

const EigenStage& Pipeline::eigen() {
  if (eigen_) return *eigen_;
  const OperatorSet& ops = assemble();
  stage_status_["eigen"] = "failed";
  if (!ops.grid.nearest_unknown(config_.x0) && !domain_.contains(config_.x0)) {
    throw Error(ErrorKind::InvalidArgument, "x0 lies outside the domain");
  }
  EigenStage s;
  s.eigen = principal_eigenpair(ops.B);
  s.leading = leading_spectrum(ops.B, config_.leading_count, s.eigen.lambda1, config_.sector_seed);
  s.eigen.leading = s.leading.values;
  s.sector = sectoriality_check(ops.S_mid, config_.sector_trials, config_.sector_seed);
  s.asymptotics = asymptotics(ops.grid, s.eigen, config_.x0);
  s.bin_edges = uniform_bins(domain_, config_.mc.bins);
  s.bin_values = quasi_potential_bins(ops.grid, ops.B, config_.x0, s.bin_edges);

  const double lambda1 = s.eigen.lambda1;
  double max_imag = 0.0;
  json leading = json::array();
  for (const auto& v : s.leading.values) {
    max_imag = std::max(max_imag, std::abs(v.value.imag()));
    leading.push_back({{"re", v.value.real()}, {"im", v.value.imag()}, {"multiplicity", v.multiplicity}});
  }
  const json j = {{"domain_hash", domain_.hash()},
                  {"triplet_key", config_.triplet_key()},
                  {"x0", config_.x0},
                  {"lambda1", lambda1},
                  {"rate", 1.0 / lambda1},
                  {"c1", s.asymptotics.coefficient},
                  {"disk_margin", s.leading.disk_margin},
                  {"sector_angle", s.leading.sector_angle},
                  {"modulus_ratio", s.leading.modulus_ratio},
                  {"leading", leading},
                  {"leading_complete", s.leading.complete},
                  {"leading_warnings", s.leading.warnings},
                  {"iterations", s.eigen.iterations},
                  {"right_residual", s.eigen.right_residual},
                  {"left_residual", s.eigen.left_residual},
                  {"index_cosine", s.eigen.index_cosine},
                  {"g1_min_ratio", s.eigen.g1_min_ratio},
                  {"h1_min_ratio", s.eigen.h1_min_ratio},
                  {"numerical_range", {{"trials", s.sector.trials},
                                       {"min_real", s.sector.min_real},
                                       {"max_angle", s.sector.max_angle},
                                       {"strongly_sectorial", s.sector.strongly_sectorial}}},
                  {"quasi_potential_bins", {{"edges", s.bin_edges}, {"values", s.bin_values}}},
                  {"units", units_json()}};
  write_json(out_ / "eigen.json", j);
  record("eigen.json");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < ops.grid.unknown_count(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    rows.push_back({ops.grid.unknown_position(i), s.eigen.g1(k), s.eigen.h1_density(k)});
  }
  write_csv(out_ / "eigenfunctions.csv", "x,g1,h1_density", rows);
  record("eigenfunctions.csv");

  const auto& tol = config_.tolerances;
  add_check("eigen", "lambda1_positive", lambda1 > 0.0 ? 1.0 : 0.0, 1.0, "==");
  add_check("eigen", "disk_containment", s.leading.disk_margin / (0.5 * lambda1), -tol.disk, ">=");
  add_check("eigen", "g1_positive", s.eigen.g1_min_ratio > 0.0 ? 1.0 : 0.0, 1.0, "==");
  add_check("eigen", "h1_nonnegative", s.eigen.h1_min_ratio, tol.positivity, ">=");
  add_check("eigen", "index_one", s.eigen.index_one ? 1.0 : 0.0, 1.0, "==");
  add_check("eigen", "strongly_sectorial", s.sector.strongly_sectorial ? 1.0 : 0.0, 1.0, "==");
  if (classify().symmetric) add_check("eigen", "real_spectrum", max_imag / lambda1, tol.symmetry, "<=");
  stage_status_["eigen"] = "ok";
  eigen_ = std::move(s);
  return *eigen_;
}

const SurvivalCurve& Pipeline::survival() {
  if (survival_) return *survival_;
  const OperatorSet& ops = assemble();
  const EigenStage& es = eigen();
  stage_status_["survival"] = "failed";
  const auto steps = static_cast<std::size_t>(std::llround(config_.time_horizon / config_.time_step));
  SurvivalCurve c = survival_curve(ops.grid, ops.L, config_.x0, uniform_times(config_.time_step, steps));
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < c.times.size(); ++k) rows.push_back({c.times[k], c.values[k]});
  write_csv(out_ / "survival.csv", "t,p", rows);
  record("survival.csv");

  const double rate = 1.0 / es.eigen.lambda1;
  json fit = nullptr;
  try {
    c.fit = fit_log_survival(c.times, c.values);
    fit = fit_json(*c.fit);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidArgument) throw;
  }
  write_json(out_ / "survival.json", {{"x0", c.x0}, {"fit", fit}, {"spectral_rate", rate}, {"units", units_json()}});
  record("survival.json");
  if (c.fit) {
    const double deviation = std::abs(c.fit->rate - rate) / rate;
    const double allowed = std::max(config_.tolerances.rate_relative, c.fit->standard_error / rate);
    add_check("survival", "rate_consistency", deviation, allowed, "<=");
  } else {
    add_check("survival", "rate_fit_window_reached", 0.0, 1.0, "==");
  }
  stage_status_["survival"] = "ok";
  survival_ = std::move(c);
  return *survival_;
}

const LaplaceStage& Pipeline::laplace() {
  if (laplace_) return *laplace_;
  const OperatorSet& ops = assemble();
  const EigenStage& es = eigen();
  const SurvivalCurve& curve = survival();
  stage_status_["laplace"] = "failed";
  LaplaceStage s;
  s.s = config_.laplace_s;
  const auto i = ops.grid.nearest_unknown(config_.x0);
  if (!i) throw Error(ErrorKind::InvalidArgument, "x0 does not map to an interior node");
  s.row_sum = ops.B.row(static_cast<Eigen::Index>(*i)).sum();
  std::vector<std::vector<double>> rows;
  json entries = json::array();
  for (double sv : s.s) {
    const double r = laplace_survival(ops.grid, ops.B, config_.x0, sv);
    const double q = curve_laplace(curve, sv, 1.0 / es.eigen.lambda1);
    s.resolvent.push_back(r);
    s.from_curve.push_back(q);
    rows.push_back({sv, r});
    entries.push_back({{"s", sv}, {"resolvent", r}, {"curve_quadrature", q}});
    char name[48];
    std::snprintf(name, sizeof name, "laplace_consistency_s=%g", sv);
    add_check("laplace", name, std::abs(r - q) / std::abs(r), config_.tolerances.laplace, "<=");
    if (sv == 0.0) add_check("laplace", "exit_time_equals_row_sum", r - s.row_sum, 0.0, "==");
  }
  write_csv(out_ / "laplace.csv", "s,value", rows);
  record("laplace.csv");
  write_json(out_ / "laplace.json", {{"entries", entries}, {"row_sum", s.row_sum}, {"units", units_json()}});
  record("laplace.json");
  stage_status_["laplace"] = "ok";
  laplace_ = std::move(s);
  return *laplace_;
}

const McStage& Pipeline::mc() {
  if (mc_) return *mc_;
  if (!config_.mc.seed) throw Error(ErrorKind::Config, "mc.seed is required for the Monte Carlo stages");
  stage_status_["mc"] = "failed";
  const auto& m = config_.mc;
  PathScheme scheme{triplet_, m.dt, m.cutoff, *m.seed, m.force_small_jumps};
  McStage s;
  const auto edges = uniform_bins(domain_, m.bins);
  s.exits = simulate_exits(scheme, config_.x0, domain_, m.horizon, m.paths, edges);
  const auto steps = static_cast<std::size_t>(std::llround(m.horizon / config_.time_step));
  s.survival = survival_from_exits(s.exits, uniform_times(config_.time_step, steps));
  try {
    s.fit = fit_decay_rate(s.survival);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidArgument) throw;
  }
  s.occupation = occupation_from_exits(s.exits);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < s.survival.times.size(); ++k) {
    rows.push_back({s.survival.times[k], s.survival.p_hat[k], s.survival.ci_lo[k], s.survival.ci_hi[k]});
  }
  write_csv(out_ / "mc_survival.csv", "t,p_hat,ci_lo,ci_hi", rows);
  record("mc_survival.csv");
  rows.clear();
  const auto& occ = s.occupation;
  for (std::size_t k = 0; k < occ.mean.size(); ++k) {
    rows.push_back({occ.bin_edges[k], occ.bin_edges[k + 1], occ.mean[k], 1.959963984540054 * occ.standard_error[k]});
  }
  write_csv(out_ / "mc_occupation.csv", "bin_left,bin_right,occ,ci", rows);
  record("mc_occupation.csv");
  const json j = {{"domain_hash", domain_.hash()},
                  {"triplet_key", config_.triplet_key()},
                  {"x0", config_.x0},
                  {"paths", m.paths},
                  {"dt", m.dt},
                  {"horizon", m.horizon},
                  {"seed", *m.seed},
                  {"method", s.exits.method},
                  {"small_jump_cutoff", m.cutoff},
                  {"censored", s.exits.censored},
                  {"fit", s.fit ? fit_json(*s.fit) : json(nullptr)},
                  {"occupation", {{"edges", occ.bin_edges},
                                  {"mean", occ.mean},
                                  {"standard_error", occ.standard_error},
                                  {"mean_exit_time", occ.mean_exit_time},
                                  {"exit_time_standard_error", occ.exit_time_standard_error}}},
                  {"units", units_json()}};
  write_json(out_ / "mc.json", j);
  record("mc.json");
  stage_status_["mc"] = "ok";
  mc_ = std::move(s);
  return *mc_;
}

SpectralSide Pipeline::spectral_side() {
  const EigenStage& es = eigen();
  return {domain_.hash(), config_.triplet_key(), config_.x0, es.eigen.lambda1, es.asymptotics.coefficient,
          es.bin_edges, es.bin_values};
}

McSide Pipeline::mc_side() {
  const McStage& s = mc();
  if (!s.fit) throw Error(ErrorKind::Numerical, "MC survival does not cover the decay-rate fit window");
  return {domain_.hash(), config_.triplet_key(), config_.x0, s.exits.n_paths, *s.fit,
          s.occupation.bin_edges, s.occupation.mean, s.occupation.standard_error};
}

ComparisonReport Pipeline::compare() {
  if (comparison_) return *comparison_;
  const SpectralSide spectral = spectral_side();
  const McSide mc = mc_side();
  stage_status_["compare"] = "failed";
  ComparisonReport r = levyruin::compare(spectral, mc, config_.tolerances);
  write_json(out_ / "comparison.json", comparison_json(r));
  record("comparison.json");
  for (const auto& e : r.entries) add_check("compare", e.name, e.deviation, e.tolerance, "<=");
  stage_status_["compare"] = "ok";
  comparison_ = r;
  return r;
}

void Pipeline::write_summary() const {
  json j;
  j["config"] = config_json(config_, domain_);
  j["classify"] = validation_ ? json{{"type", to_string(validation_->type)},
                                     {"support", to_string(validation_->support.kind)},
                                     {"symmetric", validation_->symmetric}}
                              : json(nullptr);
  j["kernel"] = kernel_ ? json{{"symbol_max_residual", kernel_->symbol.max_residual},
                               {"positivity_margin", kernel_->symbol.positivity_margin},
                               {"properties_pass", kernel_->properties.pass()}}
                        : json(nullptr);
  j["assemble"] = operators_ ? json{{"unknowns", operators_->grid.unknown_count()},
                                    {"quasi_potential_residual", operators_->residual}}
                             : json(nullptr);
  j["eigen"] = eigen_ ? json{{"lambda1", eigen_->eigen.lambda1},
                             {"c1", eigen_->asymptotics.coefficient},
                             {"rate", 1.0 / eigen_->eigen.lambda1},
                             {"disk_margin", eigen_->leading.disk_margin},
                             {"sector_angle", eigen_->leading.sector_angle}}
                      : json(nullptr);
  j["survival"] = survival_ ? json{{"fit", survival_->fit ? fit_json(*survival_->fit) : json(nullptr)}}
                            : json(nullptr);
  j["laplace"] = laplace_ ? json{{"s", laplace_->s}, {"value", laplace_->resolvent}} : json(nullptr);
  j["mc"] = mc_ ? json{{"paths", mc_->exits.n_paths},
                       {"method", mc_->exits.method},
                       {"fit", mc_->fit ? fit_json(*mc_->fit) : json(nullptr)},
                       {"mean_exit_time", mc_->occupation.mean_exit_time}}
                : json(nullptr);
  j["comparison"] = comparison_ ? comparison_json(*comparison_) : json(nullptr);
  json checks = json::array();
  for (const auto& c : checks_) checks.push_back(check_json(c));
  j["checks"] = checks;
  j["status"] = checks_pass() ? 0 : 1;
  j["units"] = units_json();
  write_json(out_ / "summary.json", j);
}

void Pipeline::write_manifest() const {
  json j = {{"artifacts", artifacts_},
            {"stages", stage_status_},
            {"config", config_json(config_, domain_)},
            {"error", failure_.empty() ? json(nullptr) : json(failure_)}};
  write_json(out_ / "manifest.json", j);
}

int Pipeline::run() {
  const auto& st = config_.stages;
  try {
    if (st.classify) classify();
    if (st.kernel) kernel();
    if (st.assemble) assemble();
    if (st.eigen) eigen();
    if (st.survival) survival();
    if (st.laplace) laplace();
    if (st.mc) mc();
    if (st.compare) compare();
  } catch (const std::exception& e) {
    failure_ = e.what();
    artifacts_.push_back("summary.json");
    write_summary();
    write_manifest();
    throw;
  }
  artifacts_.push_back("summary.json");
  write_summary();
  write_manifest();
  return checks_pass() ? 0 : 1;
}

}  // namespace levyruin
