#include "levyruin/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "levyruin/error.hpp"
#include "levyruin/parallel.hpp"
#include "levyruin/quadrature.hpp"

namespace levyruin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double TailFunctions::mu_minus(double x) const {
  if (!(x < 0.0)) throw Error(ErrorKind::InvalidArgument, "mu_minus is defined for x < 0");
  return triplet_.negative().mass_from(-x);
}

double TailFunctions::mu_plus(double x) const {
  if (!(x > 0.0)) throw Error(ErrorKind::InvalidArgument, "mu_plus is defined for x > 0");
  return -triplet_.positive().mass_above(x);
}

TailFunctions tail_functions(const LevyTriplet& triplet) { return TailFunctions(triplet); }

SideKernel::SideKernel(HalfLineMeasure measure, double anchor)
    : measure_(std::move(measure)), anchor_(anchor), tail_mass_(0.0) {
  if (!(anchor > 0.0) || !std::isfinite(anchor)) {
    throw Error(ErrorKind::InvalidArgument, "kernel anchor must be positive");
  }
  if (measure_.origin_index() >= 2.0) {
    throw Error(ErrorKind::InvalidArgument, "tail function is not integrable near 0");
  }
  tail_mass_ = measure_.moment(0, anchor_, kInf);
}

double SideKernel::signed_moment(int p, double w) const {
  return w >= anchor_ ? measure_.moment(p, anchor_, w) : -measure_.moment(p, w, anchor_);
}

double SideKernel::value(double w) const {
  if (!(w > 0.0)) throw Error(ErrorKind::InvalidArgument, "side kernel is evaluated at w > 0");
  if (measure_.is_zero()) return 0.0;
  return w * signed_moment(0, w) - signed_moment(1, w) + (anchor_ - w) * tail_mass_;
}

double SideKernel::assemble_primitive(double w, double f0, double f1, double g2) const {
  return 0.5 * g2 - w * f1 + 0.5 * w * w * f0 + (w * anchor_ - 0.5 * w * w) * tail_mass_;
}

double SideKernel::primitive(double w) const {
  if (w <= 0.0 || measure_.is_zero()) return 0.0;
  return assemble_primitive(w, signed_moment(0, w), signed_moment(1, w), measure_.moment(2, 0.0, w));
}

std::vector<double> SideKernel::primitive_sorted(const std::vector<double>& w) const {
  std::vector<double> out(w.size(), 0.0);
  if (w.empty() || measure_.is_zero()) return out;
  if (measure_.kind() != HalfLineMeasure::Kind::Density) {
    parallel_for(w.size(), [&](std::size_t i) { out[i] = primitive(w[i]); });
    return out;
  }
  const double w0 = w.front();
  if (!(w0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "primitive_sorted needs positive points");
  auto moment_between = [&](int p, double lo, double hi) {
    return hi >= lo ? measure_.moment(p, lo, hi) : -measure_.moment(p, hi, lo);
  };
  const double base2 = measure_.moment(2, 0.0, w0);
  const double a0 = moment_between(0, w0, anchor_);
  const double a1 = moment_between(1, w0, anchor_);
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i > 0) {
      if (w[i] < w[i - 1]) throw Error(ErrorKind::InvalidArgument, "primitive_sorted needs ascending points");
      c0 += measure_.moment(0, w[i - 1], w[i]);
      c1 += measure_.moment(1, w[i - 1], w[i]);
      c2 += measure_.moment(2, w[i - 1], w[i]);
    }
    out[i] = assemble_primitive(w[i], c0 - a0, c1 - a1, base2 + c2);
  }
  return out;
}

double SideKernel::anchor_slope() const {
  if (measure_.is_zero()) return 0.0;
  if (anchor_ <= 1.0) {
    return measure_.moment(1, anchor_, 1.0) - anchor_ * tail_mass_;
  }
  return -measure_.moment(1, 1.0, anchor_) - anchor_ * tail_mass_;
}

KernelFunctions::KernelFunctions(const TailFunctions& tails, double anchor)
    : anchor_(anchor),
      plus_(tails.triplet().positive(), anchor),
      minus_(tails.triplet().negative(), anchor),
      gamma1_(-minus_.anchor_slope()),
      gamma2_(plus_.anchor_slope()) {}

KernelFunctions kernel_functions(const TailFunctions& tails, double anchor) {
  return KernelFunctions(tails, anchor);
}

UnifiedKernel::UnifiedKernel(const LevyTriplet& triplet, const KernelFunctions& kernels)
    : kernels_(kernels), A_(triplet.A()), drift_coefficient_(triplet.gamma() - kernels.Gamma()) {}

double UnifiedKernel::value(double u) const {
  if (u > 0.0) return kernels_.k_plus(u) - 0.5 * drift_coefficient_;
  if (u < 0.0) return kernels_.k_minus(u) + 0.5 * drift_coefficient_;
  throw Error(ErrorKind::InvalidArgument, "unified kernel is not evaluated at 0");
}

double UnifiedKernel::primitive(double u) const {
  const double w = std::abs(u);
  const double drift = -0.5 * drift_coefficient_ * w;
  if (u > 0.0) return kernels_.plus_side().primitive(w) + drift;
  if (u < 0.0) return -kernels_.minus_side().primitive(w) + drift;
  return 0.0;
}

std::vector<double> UnifiedKernel::primitive_many(const std::vector<double>& u) const {
  std::vector<std::size_t> up, down;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > 0.0) up.push_back(i);
    if (u[i] < 0.0) down.push_back(i);
  }
  auto by_magnitude = [&](std::size_t a, std::size_t b) { return std::abs(u[a]) < std::abs(u[b]); };
  std::stable_sort(up.begin(), up.end(), by_magnitude);
  std::stable_sort(down.begin(), down.end(), by_magnitude);
  std::vector<double> out(u.size(), 0.0);
  auto fill = [&](const std::vector<std::size_t>& idx, const SideKernel& side, double sign) {
    std::vector<double> w(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) w[k] = std::abs(u[idx[k]]);
    const auto p = side.primitive_sorted(w);
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = sign * p[k] - 0.5 * drift_coefficient_ * w[k];
  };
  fill(up, kernels_.plus_side(), 1.0);
  fill(down, kernels_.minus_side(), -1.0);
  return out;
}

UnifiedKernel unified_kernel(const LevyTriplet& triplet, const KernelFunctions& kernels) {
  return UnifiedKernel(triplet, kernels);
}

UnifiedKernel make_kernel(const LevyTriplet& triplet, double anchor) {
  return UnifiedKernel(triplet, KernelFunctions(TailFunctions(triplet), anchor));
}

KernelTable tabulate_kernel(const UnifiedKernel& kernel, double h, double radius) {
  if (!(h > 0.0) || !(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "table needs h > 0 and radius > 0");
  KernelTable t;
  t.h = h;
  t.half_width = static_cast<long>(std::ceil(radius / h));
  t.A = kernel.A();
  t.drift_coefficient = kernel.drift_coefficient();
  t.anchor = kernel.anchor();
  const std::size_t m = static_cast<std::size_t>(t.half_width);
  // Edges (k + 1/2) h on both sides; the primitive is odd in the edge sign
  // except for the side-specific measures.
  std::vector<double> edges;
  edges.reserve(2 * (m + 1));
  for (std::size_t k = 0; k <= m; ++k) edges.push_back((static_cast<double>(k) + 0.5) * h);
  for (std::size_t k = 0; k <= m; ++k) edges.push_back(-(static_cast<double>(k) + 0.5) * h);
  const auto p = kernel.primitive_many(edges);
  auto right = [&](std::size_t k) { return p[k]; };
  auto left = [&](std::size_t k) { return p[m + 1 + k]; };
  t.cell_avg.assign(2 * m + 1, 0.0);
  t.cell_avg[m] = (right(0) - left(0)) / h;
  for (std::size_t d = 1; d <= m; ++d) {
    t.cell_avg[m + d] = (right(d) - right(d - 1)) / h;
    t.cell_avg[m - d] = (left(d - 1) - left(d)) / h;
  }
  for (double v : t.cell_avg) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Numerical, "non-finite kernel cell average");
  }
  return t;
}

namespace {

// Smooth window equal to 1 at 0 and vanishing with all derivatives at |v| = 1.
double window(double v) {
  const double t = std::abs(v);
  if (t >= 1.0) return 0.0;
  if (t == 0.0) return 1.0;
  const double a = std::exp(-1.0 / (1.0 - t));
  const double b = std::exp(-1.0 / t);
  return a / (a + b);
}

cplx windowed_transform(const KernelTable& table, double z, double radius) {
  const double half = 0.5 * z * table.h;
  const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
  double re = 0.0, im = 0.0;
  for (long d = -table.half_width; d <= table.half_width; ++d) {
    const double u = static_cast<double>(d) * table.h;
    const double w = window(u / radius);
    if (w == 0.0) continue;
    const double weight = table.h * table.average(d) * w;
    re += weight * std::cos(z * u);
    im += weight * std::sin(z * u);
  }
  return cplx(re, im) * sinc;
}

}  // namespace

SymbolCheckReport kernel_symbol_check(const LevyTriplet& triplet, const KernelTable& table,
                                      const std::vector<double>& frequencies, double truncation_tol) {
  SymbolCheckReport report;
  report.radius = static_cast<double>(table.half_width) * table.h;
  report.positivity_margin = kInf;
  std::vector<SymbolResidual> entries(frequencies.size());
  std::vector<double> changes(frequencies.size(), 0.0);
  parallel_for(frequencies.size(), [&](std::size_t k) {
    const double z = frequencies[k];
    if (z == 0.0) throw Error(ErrorKind::InvalidArgument, "symbol check needs nonzero frequencies");
    const cplx t = windowed_transform(table, z, report.radius);
    const cplx shorter = windowed_transform(table, z, 0.75 * report.radius);
    const cplx target = levy_symbol(triplet, z) / (z * z) - 0.5 * triplet.A();
    entries[k] = {z, t, target, std::abs(t - target)};
    changes[k] = std::abs(t - shorter);
  });
  for (std::size_t k = 0; k < entries.size(); ++k) {
    report.max_residual = std::max(report.max_residual, entries[k].residual);
    report.positivity_margin = std::min(report.positivity_margin, entries[k].transform.real());
    report.truncation_change = std::max(report.truncation_change, changes[k]);
  }
  report.entries = std::move(entries);
  if (report.truncation_change > truncation_tol) {
    throw Error(ErrorKind::Truncation, "truncation radius too small: kernel transform moves by " +
                                           std::to_string(report.truncation_change) + " when the radius shrinks");
  }
  return report;
}

SymbolCheckReport kernel_symbol_check(const LevyTriplet& triplet, const UnifiedKernel& kernel, double h,
                                      const std::vector<double>& frequencies, double radius, double max_radius,
                                      double truncation_tol) {
  for (;;) {
    try {
      return kernel_symbol_check(triplet, tabulate_kernel(kernel, h, radius), frequencies, truncation_tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Truncation || 2.0 * radius > max_radius) throw;
      radius *= 2.0;
    }
  }
}

std::vector<double> default_symbol_frequencies() {
  std::vector<double> z(20);
  for (int k = 0; k < 20; ++k) z[k] = 2.0 * std::pow(20.0, k / 19.0);
  return z;
}

bool KernelPropertyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.pass; });
}

namespace {

// Ratio of the last to the largest magnitude of f on a dyadic sequence, or 0
// when f vanishes identically.
double dyadic_decay(const std::function<double(double)>& f, bool toward_zero) {
  double largest = 0.0, last = 0.0;
  for (int k = 1; k <= 60; ++k) {
    const double x = toward_zero ? std::ldexp(1.0, -k) : std::ldexp(1.0, k);
    last = std::abs(f(x));
    largest = std::max(largest, last);
  }
  return largest == 0.0 ? 0.0 : last / largest;
}

}  // namespace

KernelPropertyReport check_kernel_properties(const LevyTriplet& triplet, double anchor) {
  const TailFunctions tails(triplet);
  const KernelFunctions kernels(tails, anchor);
  KernelPropertyReport r;
  auto add = [&](std::string name, double value, double tol, bool pass) {
    r.checks.push_back({std::move(name), value, tol, pass});
  };

  std::vector<double> xs;
  for (int k = -40; k <= 40; ++k) xs.push_back(std::pow(10.0, 0.1 * k));

  double worst_sign_plus = -kInf, worst_step_plus = kInf, worst_sign_minus = kInf, worst_step_minus = kInf;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double mp = tails.mu_plus(xs[k]);
    const double mm = tails.mu_minus(-xs[k]);
    worst_sign_plus = std::max(worst_sign_plus, mp);
    worst_sign_minus = std::min(worst_sign_minus, mm);
    if (k > 0) {
      // mu_plus nondecreasing in x; mu_minus nondecreasing in x, i.e. as -x grows.
      const double scale = std::max(1.0, std::abs(mp));
      worst_step_plus = std::min(worst_step_plus, (mp - tails.mu_plus(xs[k - 1])) / scale);
      worst_step_minus = std::min(worst_step_minus, (tails.mu_minus(-xs[k - 1]) - mm) / std::max(1.0, mm));
    }
  }
  add("mu_plus_nonpositive", worst_sign_plus, 0.0, worst_sign_plus <= 0.0);
  add("mu_minus_nonnegative", worst_sign_minus, 0.0, worst_sign_minus >= 0.0);
  add("mu_plus_nondecreasing", worst_step_plus, -1e-12, worst_step_plus >= -1e-12);
  add("mu_minus_nondecreasing", worst_step_minus, -1e-12, worst_step_minus >= -1e-12);

  const double far_plus = dyadic_decay([&](double x) { return tails.mu_plus(x); }, false);
  const double far_minus = dyadic_decay([&](double x) { return tails.mu_minus(-x); }, false);
  add("mu_plus_vanishes_at_infinity", far_plus, 1e-6, far_plus <= 1e-6);
  add("mu_minus_vanishes_at_infinity", far_minus, 1e-6, far_minus <= 1e-6);

  const double e2_plus = dyadic_decay([&](double e) { return e * e * tails.mu_plus(e); }, true);
  const double e2_minus = dyadic_decay([&](double e) { return e * e * tails.mu_minus(-e); }, true);
  add("eps2_mu_plus_to_zero", e2_plus, 1e-6, e2_plus <= 1e-6);
  add("eps2_mu_minus_to_zero", e2_minus, 1e-6, e2_minus <= 1e-6);

  const double ek_plus = dyadic_decay([&](double e) { return e * kernels.k_plus(e); }, true);
  const double ek_minus = dyadic_decay([&](double e) { return e * kernels.k_minus(-e); }, true);
  add("eps_k_plus_to_zero", ek_plus, 1e-6, ek_plus <= 1e-6);
  add("eps_k_minus_to_zero", ek_minus, 1e-6, ek_minus <= 1e-6);

  double k_plus_min = kInf, k_minus_min = kInf, k_plus_rise = -kInf, k_minus_drop = kInf;
  double prev_plus = 0.0, prev_minus = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double w = anchor * std::pow(10.0, -8.0 + 0.025 * k);
    const double kp = kernels.k_plus(w), km = kernels.k_minus(-w);
    if (w <= anchor) {
      k_plus_min = std::min(k_plus_min, kp);
      k_minus_min = std::min(k_minus_min, km);
    }
    if (k > 0) {
      const double scale = std::max({1.0, std::abs(kp), std::abs(prev_plus)});
      k_plus_rise = std::max(k_plus_rise, (kp - prev_plus) / scale);
      k_minus_drop = std::min(k_minus_drop, (prev_minus - km) / std::max({1.0, std::abs(km), std::abs(prev_minus)}));
    }
    prev_plus = kp;
    prev_minus = km;
  }
  add("k_plus_nonnegative_below_anchor", k_plus_min, 0.0, k_plus_min >= -1e-12);
  add("k_minus_nonnegative_below_anchor", k_minus_min, 0.0, k_minus_min >= -1e-12);
  add("k_plus_nonincreasing", k_plus_rise, 1e-12, k_plus_rise <= 1e-12);
  add("k_minus_nondecreasing", k_minus_drop, -1e-12, k_minus_drop >= -1e-12);

  auto integrability = [&](const SideKernel& side, const char* name) {
    const double index = side.measure().origin_index();
    const double q = index > 1.0 ? 2.0 - index : 1.0;
    const double integral = side.measure().is_zero()
                                ? 0.0
                                : quad::from_zero([&](double w) { return std::abs(side.value(w)); }, anchor, q,
                                                  "kernel integrability");
    const double closed = std::abs(side.primitive(anchor));
    const double mismatch = std::abs(integral - closed) / std::max(1.0, closed);
    add(name, integral, 1e-6, std::isfinite(integral) && mismatch <= 1e-6);
  };
  integrability(kernels.plus_side(), "k_plus_integrable");
  integrability(kernels.minus_side(), "k_minus_integrable");
  return r;
}

}  // namespace levyruin
