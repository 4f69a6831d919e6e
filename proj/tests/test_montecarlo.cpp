#include <algorithm>
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "levyruin/error.hpp"
#include "levyruin/montecarlo.hpp"
#include "levyruin/parallel.hpp"

using namespace levyruin;

namespace {

LevyTriplet find_builtin(const std::string& name) {
  for (auto& t : builtin_triplets()) {
    if (t.name == name) return t.triplet;
  }
  throw std::runtime_error("no builtin " + name);
}

std::vector<double> draw(const PathScheme& scheme, std::size_t n) {
  const IncrementSampler sampler(scheme);
  auto state = sampler.state(0);
  std::vector<double> x(n);
  for (auto& v : x) v = sampler(state);
  return x;
}

// Largest distance between the empirical characteristic function and exp(-dt lambda(z)).
double ecf_distance(const PathScheme& scheme, std::size_t n, const std::vector<double>& z) {
  const auto x = draw(scheme, n);
  double worst = 0.0;
  for (double zz : z) {
    cplx sum = 0.0;
    for (double v : x) sum += std::exp(cplx(0.0, zz * v));
    const cplx target = std::exp(-scheme.dt * levy_symbol(scheme.triplet, zz));
    worst = std::max(worst, std::abs(sum / static_cast<double>(n) - target));
  }
  return worst;
}

const Domain kUnit({{-1.0, 1.0}});

}  // namespace

TEST_CASE("seed streams") {
  CHECK(splitmix64(0) != splitmix64(1));
  CHECK(path_seed(5, 0) != path_seed(5, 1));
  CHECK(path_seed(5, 3) == path_seed(5, 3));
}

TEST_CASE("Poisson increments have the compound Poisson moments") {
  const PathScheme scheme{LevyTriplet(0.0, 0.3, PoissonFamily{2.0, 1.0}), 0.1, 1e-3, 11, false};
  const std::size_t n = 200000;
  const auto x = draw(scheme, n);
  double mean = 0.0, m2 = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  for (double v : x) m2 += (v - mean) * (v - mean);
  const double var = m2 / (n - 1);
  CHECK(IncrementSampler(scheme).method() == "exact");
  CHECK(std::abs(mean - 0.23) <= 4.0 * std::sqrt(0.2 / n));
  CHECK(std::abs(var - 0.2) <= 4.0 * 0.2 * std::sqrt(2.0 / n) + 0.01);
}

TEST_CASE("Cauchy increments pass a Kolmogorov-Smirnov test") {
  const double dt = 0.01;
  const PathScheme scheme{find_builtin("cauchy"), dt, 1e-3, 12, false};
  auto x = draw(scheme, 20000);
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double F = 0.5 + std::atan(x[k] / dt) / std::numbers::pi;
    d = std::max({d, std::abs(F - k / n), std::abs(F - (k + 1) / n)});
  }
  CHECK(d <= 1.63 / std::sqrt(n));
}

TEST_CASE("increment laws match the symbol through the characteristic function") {
  const std::size_t n = 50000;
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  for (const std::string name : {"stable_1.5_skewed", "stable_0.5", "brownian_drift", "jump_diffusion_exp", "gamma"}) {
    CAPTURE(name);
    const PathScheme scheme{find_builtin(name), 0.1, 1e-3, 13, false};
    CHECK(ecf_distance(scheme, n, {0.7, 2.0, 5.0}) <= bound);
  }
  // Small-jump substitution for a tempered law.
  const PathScheme cgmy{find_builtin("cgmy_0.5"), 0.1, 1e-3, 14, false};
  CHECK(IncrementSampler(cgmy).method() == "small_jump");
  CHECK(ecf_distance(cgmy, n, {0.7, 2.0, 5.0}) <= bound);
}

TEST_CASE("gamma subordinator increments") {
  const PathScheme scheme{find_builtin("gamma"), 0.25, 1e-3, 15, false};
  const std::size_t n = 100000;
  const auto x = draw(scheme, n);
  double mean = 0.0;
  for (double v : x) {
    CHECK(v >= 0.0);
    mean += v;
  }
  mean /= n;
  CHECK(std::abs(mean - 0.25) <= 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("invalid small-jump cutoff") {
  PathScheme scheme{find_builtin("cgmy_0.5"), 0.1, 1.5, 1, false};
  CHECK_THROWS_AS(IncrementSampler{scheme}, Error);
}

TEST_CASE("Erlang survival of a unit-jump Poisson process") {
  // Leaving [-0.5, 1.5] from 0 takes two jumps: p(t) = e^{-t}(1 + t).
  const PathScheme scheme{LevyTriplet(0.0, 0.0, PoissonFamily{1.0, 1.0}), 1e-3, 1e-3, 16, false};
  const std::size_t n = 20000;
  const auto c = estimate_survival(scheme, 0.0, Domain({{-0.5, 1.5}}), {0.0, 0.5, 1.0, 2.0}, n);
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const double t = c.times[k];
    const double p = std::exp(-t) * (1.0 + t);
    CHECK(std::abs(c.p_hat[k] - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n) + 1e-12);
  }
}

TEST_CASE("Brownian exit time and occupation with the discrete-monitoring correction") {
  // Step-resolution exit detection widens [-1, 1] to [-a, a] with a = 1 + 0.5826 sqrt(dt).
  const double dt = 1e-3;
  const double a = 1.0 + 0.5826 * std::sqrt(dt);
  const PathScheme scheme{LevyTriplet(1.0, 0.0, BrownianFamily{}), dt, 1e-3, 17, false};
  const auto occ = estimate_occupation(scheme, 0.0, kUnit, {-1.0, 0.0, 0.5, 1.0}, 20000, 50.0);
  CHECK(occ.censored == 0);
  CHECK(std::abs(occ.mean_exit_time - a * a) <= 3.0 * occ.exit_time_standard_error);
  // G(0, y) = a - |y| on [-a, a].
  CHECK(std::abs(occ.mean[1] - (0.5 * a - 0.125)) <= 3.0 * occ.standard_error[1]);
  double sum = 0.0;
  for (double m : occ.mean) sum += m;
  CHECK(sum == doctest::Approx(occ.mean_exit_time).epsilon(1e-12));
  CHECK(occ.total_bin_steps == occ.total_steps);
}

TEST_CASE("Brownian mean exit time is stable under halving dt") {
  const std::size_t n = 100000;
  auto mean_exit = [&](double dt) {
    const PathScheme scheme{LevyTriplet(1.0, 0.0, BrownianFamily{}), dt, 1e-3, 20261019, false};
    return estimate_occupation(scheme, 0.0, kUnit, uniform_bins(kUnit, 1), n, 50.0);
  };
  const auto coarse = mean_exit(1e-4);
  const auto fine = mean_exit(5e-5);
  const double se = std::hypot(coarse.exit_time_standard_error, fine.exit_time_standard_error);
  CHECK(std::abs(coarse.mean_exit_time - fine.mean_exit_time) <= 1.959963984540054 * se);
}

TEST_CASE("paths do not depend on the thread count") {
  const PathScheme scheme{find_builtin("stable_1.5_skewed"), 1e-2, 1e-3, 18, false};
  const auto edges = uniform_bins(kUnit, 4);
  set_thread_count(1);
  const ExitStats a = simulate_exits(scheme, 0.2, kUnit, 5.0, 3000, edges);
  set_thread_count(3);
  const ExitStats b = simulate_exits(scheme, 0.2, kUnit, 5.0, 3000, edges);
  set_thread_count(0);
  CHECK(a.exit_steps == b.exit_steps);
  CHECK(a.occupation_steps == b.occupation_steps);
}

TEST_CASE("start outside the domain exits immediately") {
  const PathScheme scheme{find_builtin("cauchy"), 1e-2, 1e-3, 19, false};
  const ExitStats s = simulate_exits(scheme, 2.0, kUnit, 1.0, 10);
  for (auto k : s.exit_steps) CHECK(k == 0);
}

TEST_CASE("Wilson interval") {
  const auto zero = wilson_interval(0, 100);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi > 0.0);
  const auto half = wilson_interval(50, 100);
  CHECK(half.lo + half.hi == doctest::Approx(1.0));
  CHECK(half.hi - half.lo == doctest::Approx(2 * 1.959963984540054 * 0.05).epsilon(0.02));
}

TEST_CASE("decay-rate fit on an exact curve") {
  McSurvivalCurve c;
  c.n_paths = 1000000;
  for (int k = 0; k <= 2000; ++k) {
    const double t = 0.01 * k;
    const double p = 0.9 * std::exp(-1.5 * t);
    c.times.push_back(t);
    c.p_hat.push_back(p);
    c.ci_lo.push_back(p * std::exp(-0.01));
    c.ci_hi.push_back(p * std::exp(0.01));
  }
  const RateFit f = fit_decay_rate(c);
  CHECK(f.rate == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(std::exp(f.intercept) == doctest::Approx(0.9).epsilon(1e-10));
}

TEST_CASE("small-jump cutoff barely moves the stable 0.8 survival estimate") {
  const LevyTriplet t(0.0, 0.0, StableFamily{0.8, 1.0, 0.0});
  auto survival_at = [&](double eps) {
    const PathScheme scheme{t, 1e-3, eps, 21, true};
    CHECK(IncrementSampler(scheme).method() == "small_jump");
    return estimate_survival(scheme, 0.0, kUnit, {0.0, 0.5}, 20000);
  };
  const auto coarse = survival_at(1e-2);
  const auto fine = survival_at(1e-3);
  CHECK(std::abs(coarse.p_hat[1] - fine.p_hat[1]) < fine.ci_hi[1] - fine.ci_lo[1]);
}
