#pragma once

#include <string>
#include <vector>

#include "levyruin/levy_models.hpp"

namespace levyruin {

// Tail integrals of the jump measure: mu_minus(x) = nu((-inf, x]) for x < 0 and
// mu_plus(x) = -nu((x, inf)) for x > 0.
class TailFunctions {
 public:
  explicit TailFunctions(LevyTriplet triplet) : triplet_(std::move(triplet)) {}

  double mu_minus(double x) const;
  double mu_plus(double x) const;
  const LevyTriplet& triplet() const { return triplet_; }

 private:
  LevyTriplet triplet_;
};

TailFunctions tail_functions(const LevyTriplet& triplet);

// One side of the anchored kernel on (0, inf):
//   k(w) = integral of [min(a, s) - min(w, s)] nu(ds).
// For the positive side this equals k_plus(w); for the reflected negative side
// it equals k_minus(-w).
class SideKernel {
 public:
  SideKernel(HalfLineMeasure measure, double anchor);

  double value(double w) const;
  // Integral of value over (0, w].
  double primitive(double w) const;
  // primitive() at ascending positive points; densities are integrated
  // incrementally between consecutive points.
  std::vector<double> primitive_sorted(const std::vector<double>& w) const;
  // Integral of [s 1{s<1} - min(a, s)] nu(ds): the slope of k at the anchor
  // once the compensator is accounted for.
  double anchor_slope() const;

  const HalfLineMeasure& measure() const { return measure_; }

 private:
  // Moment over [a, w) when w >= a, minus the moment over [w, a) otherwise.
  double signed_moment(int p, double w) const;
  double assemble_primitive(double w, double f0, double f1, double g2) const;

  HalfLineMeasure measure_;
  double anchor_;
  double tail_mass_;
};

class KernelFunctions {
 public:
  KernelFunctions(const TailFunctions& tails, double anchor);

  double anchor() const { return anchor_; }
  double k_minus(double x) const { return minus_.value(-x); }
  double k_plus(double x) const { return plus_.value(x); }
  double gamma1() const { return gamma1_; }
  double gamma2() const { return gamma2_; }
  double Gamma() const { return gamma1_ + gamma2_; }
  const SideKernel& plus_side() const { return plus_; }
  const SideKernel& minus_side() const { return minus_; }

 private:
  double anchor_;
  SideKernel plus_;
  SideKernel minus_;
  double gamma1_;
  double gamma2_;
};

KernelFunctions kernel_functions(const TailFunctions& tails, double anchor);

// K_tot(u), u = y - x: k_plus for u > 0, k_minus for u < 0, plus the drift
// sign-kernel -(gamma - Gamma) sign(u) / 2. The A/2 identity part of S is kept
// separate.
class UnifiedKernel {
 public:
  UnifiedKernel(const LevyTriplet& triplet, const KernelFunctions& kernels);

  double value(double u) const;
  // Integral of K_tot over [0, u] (negative for u < 0 when K_tot > 0).
  double primitive(double u) const;
  std::vector<double> primitive_many(const std::vector<double>& u) const;

  double A() const { return A_; }
  double anchor() const { return kernels_.anchor(); }
  double drift_coefficient() const { return drift_coefficient_; }
  const KernelFunctions& kernels() const { return kernels_; }

 private:
  KernelFunctions kernels_;
  double A_;
  double drift_coefficient_;
};

UnifiedKernel unified_kernel(const LevyTriplet& triplet, const KernelFunctions& kernels);
UnifiedKernel make_kernel(const LevyTriplet& triplet, double anchor = 1.0);

// Cell averages of K_tot over [(d - 1/2) h, (d + 1/2) h] for |d| <= half_width.
struct KernelTable {
  double h = 0.0;
  long half_width = 0;
  std::vector<double> cell_avg;
  double A = 0.0;
  double drift_coefficient = 0.0;
  double anchor = 1.0;

  bool covers(long d) const { return d >= -half_width && d <= half_width; }
  double average(long d) const { return cell_avg[static_cast<std::size_t>(d + half_width)]; }
  double u_left(long d) const { return (static_cast<double>(d) - 0.5) * h; }
  double u_right(long d) const { return (static_cast<double>(d) + 0.5) * h; }
  double radius() const { return (static_cast<double>(half_width) + 0.5) * h; }
};

KernelTable tabulate_kernel(const UnifiedKernel& kernel, double h, double radius);

struct SymbolResidual {
  double z;
  cplx transform;
  cplx target;
  double residual;
};

struct SymbolCheckReport {
  std::vector<SymbolResidual> entries;
  double max_residual = 0.0;
  // Smallest real part of the kernel transform over the tested frequencies.
  double positivity_margin = 0.0;
  // Largest change of the transform when the window radius shrinks by 25%.
  double truncation_change = 0.0;
  double radius = 0.0;
};

// Compares the windowed transform of the tabulated kernel with lambda(z)/z^2 - A/2.
// Throws ErrorKind::Truncation when the transform still moves with the window
// radius by more than truncation_tol.
SymbolCheckReport kernel_symbol_check(const LevyTriplet& triplet, const KernelTable& table,
                                      const std::vector<double>& frequencies, double truncation_tol = 1e-4);
// Tabulates the kernel at step h and doubles the radius, up to max_radius,
// while the truncation test fails. Slowly growing kernels such as stable
// laws with alpha < 1 need radii well beyond 50.
SymbolCheckReport kernel_symbol_check(const LevyTriplet& triplet, const UnifiedKernel& kernel, double h,
                                      const std::vector<double>& frequencies, double radius = 50.0,
                                      double max_radius = 800.0, double truncation_tol = 1e-4);
// Twenty log-spaced frequencies in [2, 40].
std::vector<double> default_symbol_frequencies();

struct PropertyCheck {
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

struct KernelPropertyReport {
  std::vector<PropertyCheck> checks;
  bool pass() const;
};

// Sign, monotonicity, origin limits and integrability of the tails and kernels.
KernelPropertyReport check_kernel_properties(const LevyTriplet& triplet, double anchor = 1.0);

}  // namespace levyruin
