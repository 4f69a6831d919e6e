#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "levyruin/levy_models.hpp"
#include "levyruin/spectral_survival.hpp"

namespace levyruin {

struct PathScheme {
  LevyTriplet triplet;
  double dt = 1e-3;
  // Jumps smaller than this are replaced by a Gaussian with matched variance
  // when the family has no exact increment sampler.
  double small_jump_cutoff = 1e-3;
  std::uint64_t seed = 0;
  // Use the small-jump substitution even when an exact sampler exists.
  bool force_small_jumps = false;
};

// splitmix64 finalizer; per-path seeds are splitmix64(seed + index * golden).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index);

// One-step law of the process over dt.
class IncrementSampler {
 public:
  explicit IncrementSampler(const PathScheme& scheme);

  // Per-path random state; distributions with internal caches live here.
  struct State {
    std::mt19937_64 engine;
    std::normal_distribution<double> normal;
    std::poisson_distribution<long> count_plus;
    std::poisson_distribution<long> count_minus;
    std::gamma_distribution<double> gamma;
  };
  State state(std::uint64_t path_index) const;
  double operator()(State& s) const;

  // "exact" or "small_jump".
  const std::string& method() const { return method_; }
  double dt() const { return dt_; }

  // Deterministic part per step and variance of the Gaussian part per step.
  double drift_per_step() const { return drift_; }
  double gaussian_variance() const { return variance_; }

 private:
  enum class Jumps { None, Poisson, Compound, Atoms, Stable, Gamma, Substituted };
  // Jump sizes on one half-line above the cutoff, reflected for the negative side.
  struct SideSampler {
    enum class Kind { None, PowerLaw, Atoms, Table } kind = Kind::None;
    double rate = 0.0;
    double cutoff = 0.0;
    double alpha = 0.0;
    std::vector<double> positions;
    std::vector<double> log_positions;
    std::vector<double> cumulative;
    double draw(std::mt19937_64& engine) const;
  };
  SideSampler make_side(const HalfLineMeasure& m, double cutoff) const;
  double compound_jump(State& s) const;

  std::string method_;
  double dt_;
  double drift_ = 0.0;
  double variance_ = 0.0;
  Jumps jumps_ = Jumps::None;
  std::uint64_t seed_;
  LevyMeasureSpec spec_;
  double count_mean_ = 0.0;
  std::vector<double> atom_positions_;
  std::vector<double> atom_cumulative_;
  // Stable parameters over one step: alpha, skew, scale, location.
  double alpha_ = 0.0, skew_ = 0.0, scale_ = 0.0, location_ = 0.0;
  double gamma_shape_ = 0.0, gamma_scale_ = 1.0;
  SideSampler plus_, minus_;
};

struct ExitStats {
  std::size_t n_paths = 0;
  double dt = 0.0;
  std::uint64_t max_steps = 0;
  // Step index of the first position outside the domain; max_steps + 1 for
  // paths still inside at the horizon.
  std::vector<std::uint64_t> exit_steps;
  std::size_t censored = 0;
  // Bin occupation counts in steps, path-major; empty without bins.
  std::vector<double> bin_edges;
  std::vector<std::uint32_t> occupation_steps;
  std::string method;
};

// Walks x <- x + increment until x leaves the domain or the horizon passes.
// Exit is detected at step resolution only; x0 outside the domain exits at
// step 0. With bin edges, each step credits dt to the bin of its left point.
ExitStats simulate_exits(const PathScheme& scheme, double x0, const Domain& domain, double horizon,
                         std::size_t n_paths, const std::vector<double>& bin_edges = {});

struct McSurvivalCurve {
  std::vector<double> times;
  std::vector<double> p_hat;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::size_t n_paths = 0;
};

// Wilson score interval for k successes out of n.
struct WilsonInterval {
  double lo;
  double hi;
};
WilsonInterval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

McSurvivalCurve survival_from_exits(const ExitStats& stats, const std::vector<double>& times);
McSurvivalCurve estimate_survival(const PathScheme& scheme, double x0, const Domain& domain,
                                  const std::vector<double>& times, std::size_t n_paths);

// Weighted least squares of log p_hat on t over p_hat in [lo, hi], weights
// from the CI widths. The standard error is the sandwich form with
// Cov(log p_i, log p_j) = Var(log p_min(i,j)), which holds for a survival
// curve read off one set of paths.
RateFit fit_decay_rate(const McSurvivalCurve& curve, double lo = 1e-4, double hi = 1e-1);

struct OccupationEstimate {
  std::vector<double> bin_edges;
  // Mean time spent in each bin before exit and its standard error.
  std::vector<double> mean;
  std::vector<double> standard_error;
  double mean_exit_time = 0.0;
  double exit_time_standard_error = 0.0;
  std::uint64_t total_steps = 0;
  std::uint64_t total_bin_steps = 0;
  std::size_t censored = 0;
  std::size_t n_paths = 0;
};

OccupationEstimate occupation_from_exits(const ExitStats& stats);
OccupationEstimate estimate_occupation(const PathScheme& scheme, double x0, const Domain& domain,
                                       const std::vector<double>& bin_edges, std::size_t n_paths, double horizon);

// count + 1 equal-width bin edges across [lower, upper] of the domain.
std::vector<double> uniform_bins(const Domain& domain, std::size_t count);

}  // namespace levyruin
