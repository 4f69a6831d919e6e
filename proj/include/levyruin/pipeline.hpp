#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "levyruin/config.hpp"
#include "levyruin/kernel.hpp"
#include "levyruin/levy_models.hpp"
#include "levyruin/montecarlo.hpp"
#include "levyruin/operator.hpp"
#include "levyruin/spectral_survival.hpp"

namespace levyruin {

// One acceptance check. relation is "<=", ">=" or "==" between value and tolerance.
struct Check {
  std::string stage;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string relation;
  bool pass = false;
};

// What the spectral side contributes to a comparison.
struct SpectralSide {
  std::string domain_hash;
  std::string triplet_key;
  double x0 = 0.0;
  double lambda1 = 0.0;
  double c1 = 0.0;
  std::vector<double> bin_edges;
  std::vector<double> bin_values;
};

struct McSide {
  std::string domain_hash;
  std::string triplet_key;
  double x0 = 0.0;
  std::size_t paths = 0;
  RateFit fit;
  std::vector<double> bin_edges;
  std::vector<double> occupation;
  std::vector<double> occupation_standard_error;
};

struct ComparisonEntry {
  std::string name;
  double spectral = 0.0;
  double mc = 0.0;
  double deviation = 0.0;
  double tolerance = 0.0;
  std::string units;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonEntry> entries;
  bool pass() const;
};

// Decay rate 1/lambda1 against the MC fit (within rate_sigmas standard
// errors), c1 against the MC intercept, and the largest occupation deviation
// in standard-error units. Throws ErrorKind::Mismatch when the two sides
// describe different domains, triplets or starting points.
ComparisonReport compare(const SpectralSide& spectral, const McSide& mc, const Tolerances& tol);

// Reads the sides back from eigen.json and mc.json written by a pipeline.
SpectralSide load_spectral_side(const std::filesystem::path& eigen_json);
McSide load_mc_side(const std::filesystem::path& mc_json);

struct KernelStage {
  KernelTable table;
  SymbolCheckReport symbol;
  KernelPropertyReport properties;
};

struct EigenStage {
  EigenResult eigen;
  LeadingSpectrum leading;
  SectorialityReport sector;
  Asymptotics asymptotics;
  std::vector<double> bin_edges;
  std::vector<double> bin_values;
};

struct LaplaceStage {
  std::vector<double> s;
  std::vector<double> resolvent;
  std::vector<double> from_curve;
  double row_sum = 0.0;
};

struct McStage {
  ExitStats exits;
  McSurvivalCurve survival;
  std::optional<RateFit> fit;
  OccupationEstimate occupation;
};

// Runs the stages of one configuration lazily, each at most once, writing
// its artifacts into the output directory as it completes. Spectral stages
// throw ErrorKind::Gate when the triplet is not of type II or the domain
// leaves the support.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::filesystem::path out, bool dump_matrices = false);

  const RunConfig& config() const { return config_; }
  const ValidationReport& classify();
  const KernelStage& kernel();
  const OperatorSet& assemble();
  const EigenStage& eigen();
  const SurvivalCurve& survival();
  const LaplaceStage& laplace();
  const McStage& mc();
  ComparisonReport compare();

  // Enabled stages in dependency order, then summary.json and manifest.json.
  // Returns 0 when every check passes and 1 otherwise; stage errors are
  // recorded in the manifest and rethrown.
  int run();

  const std::vector<Check>& checks() const { return checks_; }
  bool checks_pass() const;
  // Stage statuses, artifacts written so far and the failure message, if any.
  void write_manifest() const;
  void set_failure(const std::string& message) { failure_ = message; }

 private:
  void require_spectral();
  void record(const std::string& file);
  void add_check(const std::string& stage, const std::string& name, double value, double tolerance,
                 const std::string& relation);
  SpectralSide spectral_side();
  McSide mc_side();
  void write_summary() const;

  RunConfig config_;
  std::filesystem::path out_;
  bool dump_matrices_;
  Domain domain_;
  LevyTriplet triplet_;
  std::vector<Check> checks_;
  std::vector<std::string> artifacts_;
  std::map<std::string, std::string> stage_status_;
  std::string failure_;

  std::optional<ValidationReport> validation_;
  std::optional<KernelStage> kernel_;
  std::optional<OperatorSet> operators_;
  std::optional<EigenStage> eigen_;
  std::optional<SurvivalCurve> survival_;
  std::optional<LaplaceStage> laplace_;
  std::optional<McStage> mc_;
  std::optional<ComparisonReport> comparison_;
};

}  // namespace levyruin
