#include "levyruin/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "levyruin/error.hpp"
#include "levyruin/parallel.hpp"

namespace levyruin {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kHalfPi = std::numbers::pi / 2.0;

double uniform01(std::mt19937_64& e) { return std::generate_canonical<double, 64>(e); }

// Uniform on (0, 1), never exactly 0.
double open_uniform(std::mt19937_64& e) {
  for (;;) {
    const double u = uniform01(e);
    if (u > 0.0) return u;
  }
}

// Chambers-Mallows-Stuck draw of S_alpha(scale, skew, location) in the
// Samorodnitsky-Taqqu parameterization.
double stable_draw(std::mt19937_64& e, double alpha, double skew, double scale, double location) {
  const double V = std::numbers::pi * (open_uniform(e) - 0.5);
  const double W = -std::log(open_uniform(e));
  if (alpha == 1.0) {
    if (skew == 0.0) return scale * std::tan(V) + location;
    const double a = kHalfPi + skew * V;
    const double X = (a * std::tan(V) - skew * std::log(kHalfPi * W * std::cos(V) / a)) / kHalfPi;
    return scale * X + skew * scale * std::log(scale) / kHalfPi + location;
  }
  const double t = skew * std::tan(kHalfPi * alpha);
  const double B = std::atan(t) / alpha;
  const double S = std::pow(1.0 + t * t, 0.5 / alpha);
  const double X = S * std::sin(alpha * (V + B)) / std::pow(std::cos(V), 1.0 / alpha) *
                   std::pow(std::cos(V - alpha * (V + B)) / W, (1.0 - alpha) / alpha);
  return scale * X + location;
}

double draw_jump_law(const JumpLaw& law, IncrementSampler::State& s) {
  return std::visit(overloaded{
                        [](const FixedJump& j) { return j.size; },
                        [&](const ExponentialJump& j) {
                          const double x = -std::log(open_uniform(s.engine)) / j.rate;
                          return j.negative ? -x : x;
                        },
                        [&](const NormalJump& j) { return j.mean + j.sd * s.normal(s.engine); },
                    },
                    law);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + index * 0x9e3779b97f4a7c15ULL);
}

double IncrementSampler::SideSampler::draw(std::mt19937_64& engine) const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::PowerLaw:
      return cutoff * std::pow(open_uniform(engine), -1.0 / alpha);
    case Kind::Atoms: {
      const double u = uniform01(engine) * cumulative.back();
      const auto k = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
      return positions[static_cast<std::size_t>(std::min<long>(k, static_cast<long>(positions.size()) - 1))];
    }
    case Kind::Table: {
      // Inverse of the tail mass, linear in log x between tabulated points.
      const double u = uniform01(engine) * cumulative.back();
      auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      k = std::clamp<std::size_t>(k, 1, cumulative.size() - 1);
      const double span = cumulative[k] - cumulative[k - 1];
      const double f = span > 0.0 ? (u - cumulative[k - 1]) / span : 0.0;
      return std::exp(log_positions[k - 1] + f * (log_positions[k] - log_positions[k - 1]));
    }
  }
  return 0.0;
}

IncrementSampler::SideSampler IncrementSampler::make_side(const HalfLineMeasure& m, double cutoff) const {
  SideSampler s;
  s.cutoff = cutoff;
  switch (m.kind()) {
    case HalfLineMeasure::Kind::Zero:
      return s;
    case HalfLineMeasure::Kind::PowerLaw:
      s.kind = SideSampler::Kind::PowerLaw;
      s.alpha = m.alpha();
      s.rate = m.mass_from(cutoff);
      return s;
    case HalfLineMeasure::Kind::Atoms: {
      s.kind = SideSampler::Kind::Atoms;
      double total = 0.0;
      for (const auto& a : m.atom_list()) {
        if (a.position < cutoff) continue;
        total += a.mass;
        s.positions.push_back(a.position);
        s.cumulative.push_back(total);
      }
      s.rate = total;
      if (s.positions.empty()) s.kind = SideSampler::Kind::None;
      return s;
    }
    case HalfLineMeasure::Kind::Density: {
      s.kind = SideSampler::Kind::Table;
      s.rate = m.mass_from(cutoff);
      if (!(s.rate > 0.0)) {
        s.kind = SideSampler::Kind::None;
        return s;
      }
      double top = std::max(1.0, 2.0 * cutoff);
      while (m.mass_above(top) > 1e-13 * s.rate && top < 1e8) top *= 2.0;
      constexpr int kPoints = 4000;
      s.positions.resize(kPoints + 1);
      s.log_positions.resize(kPoints + 1);
      s.cumulative.resize(kPoints + 1);
      const double step = std::log(top / cutoff) / kPoints;
      s.positions[0] = cutoff;
      s.log_positions[0] = std::log(cutoff);
      s.cumulative[0] = 0.0;
      for (int k = 1; k <= kPoints; ++k) {
        s.positions[k] = cutoff * std::exp(step * k);
        s.log_positions[k] = std::log(s.positions[k]);
        s.cumulative[k] = s.cumulative[k - 1] + m.moment(0, s.positions[k - 1], s.positions[k]);
      }
      return s;
    }
  }
  return s;
}

IncrementSampler::IncrementSampler(const PathScheme& scheme)
    : dt_(scheme.dt), seed_(scheme.seed), spec_(scheme.triplet.measure()) {
  const LevyTriplet& t = scheme.triplet;
  if (!(dt_ > 0.0)) throw Error(ErrorKind::Config, "time step must be positive");
  const double eps = scheme.small_jump_cutoff;
  variance_ = t.A() * dt_;
  method_ = "exact";

  auto substitute = [&] {
    if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::Config, "small-jump cutoff must lie in (0, 1)");
    method_ = "small_jump";
    jumps_ = Jumps::Substituted;
    plus_ = make_side(t.positive(), eps);
    minus_ = make_side(t.negative(), eps);
    // Jumps in [eps, 1) are compensated in the triplet; jumps below eps become
    // a centred Gaussian.
    const double compensator = t.positive().moment(1, eps, 1.0) - t.negative().moment(1, eps, 1.0);
    drift_ = (t.gamma() - compensator) * dt_;
    variance_ += (t.positive().moment(2, 0.0, eps) + t.negative().moment(2, 0.0, eps)) * dt_;
  };

  if (scheme.force_small_jumps && !std::holds_alternative<BrownianFamily>(spec_)) {
    substitute();
    return;
  }
  std::visit(overloaded{
                 [&](const BrownianFamily&) {
                   jumps_ = Jumps::None;
                   drift_ = t.gamma() * dt_;
                 },
                 [&](const PoissonFamily& f) {
                   jumps_ = Jumps::Poisson;
                   count_mean_ = f.rate * dt_;
                   drift_ = (t.gamma() - t.small_jump_mean()) * dt_;
                 },
                 [&](const CompoundPoissonFamily& f) {
                   jumps_ = Jumps::Compound;
                   count_mean_ = f.rate * dt_;
                   drift_ = (t.gamma() - t.small_jump_mean()) * dt_;
                 },
                 [&](const AtomMeasure& f) {
                   jumps_ = Jumps::Atoms;
                   double total = 0.0;
                   for (const auto& a : f.atoms) {
                     total += a.mass;
                     atom_positions_.push_back(a.position);
                     atom_cumulative_.push_back(total);
                   }
                   count_mean_ = total * dt_;
                   drift_ = (t.gamma() - t.small_jump_mean()) * dt_;
                 },
                 [&](const StableFamily& f) {
                   jumps_ = Jumps::Stable;
                   const auto c = stable_coefficients(f);
                   alpha_ = f.alpha;
                   skew_ = f.skew;
                   if (f.alpha == 1.0) {
                     scale_ = f.scale * dt_;
                     location_ = (t.gamma() + (1.0 - kEulerGamma) * (c.c_plus - c.c_minus)) * dt_;
                   } else {
                     scale_ = f.scale * std::pow(dt_, 1.0 / f.alpha);
                     location_ = (t.gamma() - (c.c_plus - c.c_minus) / (1.0 - f.alpha)) * dt_;
                   }
                 },
                 [&](const GammaFamily& f) {
                   jumps_ = Jumps::Gamma;
                   gamma_shape_ = f.shape * dt_;
                   gamma_scale_ = 1.0 / f.rate;
                   drift_ = (t.gamma() - t.small_jump_mean()) * dt_;
                 },
                 [&](const CgmyFamily&) { substitute(); },
                 [&](const DensityMeasure&) { substitute(); },
             },
             spec_);
}

IncrementSampler::State IncrementSampler::state(std::uint64_t path_index) const {
  const double plus_mean = jumps_ == Jumps::Substituted ? plus_.rate * dt_ : count_mean_;
  const double minus_mean = minus_.rate * dt_;
  return State{std::mt19937_64(path_seed(seed_, path_index)), std::normal_distribution<double>(),
               std::poisson_distribution<long>(plus_mean > 0.0 ? plus_mean : 1.0),
               std::poisson_distribution<long>(minus_mean > 0.0 ? minus_mean : 1.0),
               std::gamma_distribution<double>(gamma_shape_ > 0.0 ? gamma_shape_ : 1.0, gamma_scale_)};
}

double IncrementSampler::compound_jump(State& s) const {
  return std::visit(overloaded{
                        [&](const PoissonFamily& f) { return f.jump; },
                        [&](const CompoundPoissonFamily& f) { return draw_jump_law(f.jump, s); },
                        [&](const AtomMeasure&) {
                          const double u = uniform01(s.engine) * atom_cumulative_.back();
                          auto k = std::upper_bound(atom_cumulative_.begin(), atom_cumulative_.end(), u) -
                                   atom_cumulative_.begin();
                          k = std::min<long>(k, static_cast<long>(atom_positions_.size()) - 1);
                          return atom_positions_[static_cast<std::size_t>(k)];
                        },
                        [](const auto&) { return 0.0; },
                    },
                    spec_);
}

double IncrementSampler::operator()(State& s) const {
  double x = drift_;
  if (variance_ > 0.0) x += std::sqrt(variance_) * s.normal(s.engine);
  switch (jumps_) {
    case Jumps::None:
      break;
    case Jumps::Poisson:
    case Jumps::Compound:
    case Jumps::Atoms: {
      if (count_mean_ <= 0.0) break;
      const long n = s.count_plus(s.engine);
      for (long k = 0; k < n; ++k) x += compound_jump(s);
      break;
    }
    case Jumps::Stable:
      x += stable_draw(s.engine, alpha_, skew_, scale_, location_);
      break;
    case Jumps::Gamma:
      if (gamma_shape_ > 0.0) x += s.gamma(s.engine);
      break;
    case Jumps::Substituted: {
      if (plus_.rate > 0.0) {
        const long n = s.count_plus(s.engine);
        for (long k = 0; k < n; ++k) x += plus_.draw(s.engine);
      }
      if (minus_.rate > 0.0) {
        const long n = s.count_minus(s.engine);
        for (long k = 0; k < n; ++k) x -= minus_.draw(s.engine);
      }
      break;
    }
  }
  return x;
}

ExitStats simulate_exits(const PathScheme& scheme, double x0, const Domain& domain, double horizon,
                         std::size_t n_paths, const std::vector<double>& bin_edges) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  if (!bin_edges.empty()) {
    if (bin_edges.size() < 2 || !std::is_sorted(bin_edges.begin(), bin_edges.end()) ||
        bin_edges.front() > domain.lower() || bin_edges.back() < domain.upper()) {
      throw Error(ErrorKind::InvalidArgument, "bin edges must be increasing and cover the domain");
    }
  }
  const IncrementSampler sampler(scheme);
  ExitStats st;
  st.n_paths = n_paths;
  st.dt = scheme.dt;
  st.max_steps = static_cast<std::uint64_t>(std::llround(horizon / scheme.dt));
  st.exit_steps.assign(n_paths, 0);
  st.bin_edges = bin_edges;
  st.method = sampler.method();
  const std::size_t nb = bin_edges.empty() ? 0 : bin_edges.size() - 1;
  st.occupation_steps.assign(n_paths * nb, 0);

  parallel_for(n_paths, [&](std::size_t i) {
    if (!domain.contains(x0)) return;
    IncrementSampler::State s = sampler.state(i);
    std::uint32_t* occ = nb ? &st.occupation_steps[i * nb] : nullptr;
    double x = x0;
    std::uint64_t k = 1;
    for (; k <= st.max_steps; ++k) {
      if (occ) {
        const auto b = std::upper_bound(bin_edges.begin(), bin_edges.end(), x) - bin_edges.begin() - 1;
        ++occ[std::clamp<long>(b, 0, static_cast<long>(nb) - 1)];
      }
      x += sampler(s);
      if (!domain.contains(x)) break;
    }
    st.exit_steps[i] = k;
  });
  st.censored = static_cast<std::size_t>(
      std::count(st.exit_steps.begin(), st.exit_steps.end(), st.max_steps + 1));
  return st;
}

WilsonInterval wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "Wilson interval needs n > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

McSurvivalCurve survival_from_exits(const ExitStats& stats, const std::vector<double>& times) {
  McSurvivalCurve c;
  c.times = times;
  c.n_paths = stats.n_paths;
  for (double t : times) {
    if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "survival times must be nonnegative");
    const auto step = static_cast<std::uint64_t>(std::llround(t / stats.dt));
    if (step > stats.max_steps) throw Error(ErrorKind::InvalidArgument, "survival time beyond the simulated horizon");
    const auto alive = static_cast<std::size_t>(std::count_if(stats.exit_steps.begin(), stats.exit_steps.end(),
                                                              [&](std::uint64_t k) { return k > step; }));
    const auto ci = wilson_interval(alive, stats.n_paths);
    c.p_hat.push_back(static_cast<double>(alive) / static_cast<double>(stats.n_paths));
    c.ci_lo.push_back(ci.lo);
    c.ci_hi.push_back(ci.hi);
  }
  return c;
}

McSurvivalCurve estimate_survival(const PathScheme& scheme, double x0, const Domain& domain,
                                  const std::vector<double>& times, std::size_t n_paths) {
  if (n_paths < 1000) throw Error(ErrorKind::InvalidArgument, "survival estimation needs at least 1000 paths");
  if (times.empty()) throw Error(ErrorKind::InvalidArgument, "survival estimation needs times");
  const double horizon = std::max(times.back(), scheme.dt);
  return survival_from_exits(simulate_exits(scheme, x0, domain, horizon, n_paths), times);
}

RateFit fit_decay_rate(const McSurvivalCurve& curve, double lo, double hi) {
  std::vector<double> t, y, var;
  constexpr double z = 1.959963984540054;
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const double p = curve.p_hat[i];
    if (p < lo || p > hi || p <= 0.0 || p >= 1.0) continue;
    const double sigma = (std::log(curve.ci_hi[i]) - std::log(curve.ci_lo[i])) / (2.0 * z);
    t.push_back(curve.times[i]);
    y.push_back(std::log(p));
    var.push_back(sigma * sigma);
  }
  if (t.size() < 5) throw Error(ErrorKind::InvalidArgument, "rate fit window holds fewer than 5 points with 0 < p < 1");
  const std::size_t n = t.size();
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd Y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = t[i];
    Y[i] = y[i];
    w[i] = 1.0 / var[i];
  }
  const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
  const Eigen::Matrix2d bread = (XtW * X).inverse();
  const Eigen::Vector2d beta = bread * (XtW * Y);
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cov(i, j) = var[std::min(i, j)];
  }
  const Eigen::Matrix2d sandwich = bread * (XtW * cov * XtW.transpose()) * bread;
  RateFit f;
  f.rate = -beta[1];
  f.intercept = beta[0];
  f.standard_error = std::sqrt(sandwich(1, 1));
  f.intercept_standard_error = std::sqrt(sandwich(0, 0));
  f.points = n;
  return f;
}

OccupationEstimate occupation_from_exits(const ExitStats& stats) {
  if (stats.bin_edges.size() < 2) throw Error(ErrorKind::InvalidArgument, "exit statistics carry no bins");
  const std::size_t nb = stats.bin_edges.size() - 1;
  const double n = static_cast<double>(stats.n_paths);
  OccupationEstimate o;
  o.bin_edges = stats.bin_edges;
  o.n_paths = stats.n_paths;
  o.censored = stats.censored;
  o.mean.assign(nb, 0.0);
  o.standard_error.assign(nb, 0.0);
  std::vector<double> sum(nb, 0.0), sum2(nb, 0.0);
  double ts = 0.0, ts2 = 0.0;
  for (std::size_t i = 0; i < stats.n_paths; ++i) {
    std::uint64_t path_total = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const std::uint32_t c = stats.occupation_steps[i * nb + b];
      path_total += c;
      const double v = static_cast<double>(c) * stats.dt;
      sum[b] += v;
      sum2[b] += v * v;
    }
    o.total_bin_steps += path_total;
    const std::uint64_t steps = std::min(stats.exit_steps[i], stats.max_steps);
    o.total_steps += steps;
    const double tv = static_cast<double>(steps) * stats.dt;
    ts += tv;
    ts2 += tv * tv;
  }
  for (std::size_t b = 0; b < nb; ++b) {
    o.mean[b] = sum[b] / n;
    o.standard_error[b] = std::sqrt(std::max(0.0, sum2[b] / n - o.mean[b] * o.mean[b]) / (n - 1.0));
  }
  o.mean_exit_time = static_cast<double>(o.total_steps) * stats.dt / n;
  o.exit_time_standard_error = std::sqrt(std::max(0.0, ts2 / n - (ts / n) * (ts / n)) / (n - 1.0));
  return o;
}

OccupationEstimate estimate_occupation(const PathScheme& scheme, double x0, const Domain& domain,
                                       const std::vector<double>& bin_edges, std::size_t n_paths, double horizon) {
  return occupation_from_exits(simulate_exits(scheme, x0, domain, horizon, n_paths, bin_edges));
}

std::vector<double> uniform_bins(const Domain& domain, std::size_t count) {
  if (count == 0) throw Error(ErrorKind::InvalidArgument, "need at least one bin");
  std::vector<double> e(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    e[k] = domain.lower() + domain.span() * static_cast<double>(k) / static_cast<double>(count);
  }
  e.back() = domain.upper();
  return e;
}

}  // namespace levyruin
