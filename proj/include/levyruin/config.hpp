#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "levyruin/domain.hpp"
#include "levyruin/levy_models.hpp"

namespace levyruin {

struct StageToggles {
  bool classify = true;
  bool kernel = true;
  bool assemble = true;
  bool eigen = true;
  bool survival = true;
  bool laplace = true;
  bool mc = false;
  bool compare = false;
};

// Defaults match the acceptance criteria.
struct Tolerances {
  double symbol_residual = 1e-3;
  double positivity = -1e-8;
  double disk = 1e-6;
  double symmetry = 1e-8;
  double laplace = 1e-3;
  double rate_relative = 5e-3;
  double rate_sigmas = 2.0;
  double occupation_sigmas = 2.0;
  double quasi_potential_residual = 1e-10;
};

struct McSettings {
  std::size_t paths = 100000;
  double dt = 1e-4;
  double horizon = 20.0;
  std::optional<std::uint64_t> seed;
  double cutoff = 1e-3;
  std::size_t bins = 8;
  bool force_small_jumps = false;
};

struct RunConfig {
  std::string family;
  double A = 0.0;
  double gamma = 0.0;
  // Family parameters as written under [params]; atoms use comma lists.
  std::map<std::string, std::string> params;
  std::vector<Interval> domain;
  double x0 = 0.0;
  double resolution = 200.0;
  double anchor = 1.0;

  double time_step = 0.02;
  double time_horizon = 20.0;
  std::vector<double> laplace_s{0.0, 0.5, 1.0, 2.0};

  int leading_count = 10;
  int sector_trials = 200;
  std::uint64_t sector_seed = 1;
  // Kernel table step for the symbol check and its starting radius.
  double symbol_step = 1e-3;
  double symbol_radius = 50.0;

  McSettings mc;
  StageToggles stages;
  Tolerances tolerances;

  LevyTriplet triplet() const;
  Domain make_domain() const { return Domain(domain); }
  // Canonical description of the triplet for cross-checking artifacts.
  std::string triplet_key() const;
};

// Parses the INI-style configuration. Throws ErrorKind::Config on syntax
// errors, unknown keys, missing required values or an invalid triplet.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// The seed may come from the command line, so it is checked separately.
// Throws ErrorKind::Config when the Monte Carlo stage is on without a seed.
void require_seed(const RunConfig& config);

// "[a,b]" intervals separated by whitespace or "u".
std::vector<Interval> parse_domain(const std::string& text);

}  // namespace levyruin
