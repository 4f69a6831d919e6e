#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "levyruin/domain.hpp"

namespace levyruin {

using cplx = std::complex<double>;

struct Atom {
  double position;
  double mass;
};

// Declared behaviour of a density at the origin: nu(s) ~ s^(-1-index).
// A negative index means the density is integrable there.
struct NearZero {
  double index;
};

// Jump measure restricted to one half-line. Negative jumps are stored
// reflected, so every instance lives on (0, inf).
class HalfLineMeasure {
 public:
  enum class Kind { Zero, Atoms, PowerLaw, Density };

  HalfLineMeasure() = default;
  static HalfLineMeasure atoms(std::vector<Atom> atoms);
  // coefficient * s^(-1-alpha)
  static HalfLineMeasure power_law(double coefficient, double alpha);
  static HalfLineMeasure density(std::function<double(double)> f, std::optional<NearZero> near_zero,
                                 bool touches_zero);

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero; }
  // Both throw ErrorKind::Unclassifiable for a density with no declared origin behaviour.
  bool finite_mass() const;
  bool finite_variation() const;
  bool touches_zero() const { return touches_zero_; }

  // Integral of s^p over [lo, hi); hi may be infinite.
  double moment(int p, double lo, double hi) const;
  // nu((x, inf)) and nu([x, inf)).
  double mass_above(double x) const;
  double mass_from(double x) const;
  double density_at(double s) const;

  // Integral of (e^{izs} - 1 - izs 1{s<1}) nu(ds), closed form where one exists.
  cplx transform(double z) const;
  // Same integral evaluated from the density or atoms, never from a closed form.
  cplx transform_by_quadrature(double z) const;

  bool same_as(const HalfLineMeasure& other) const;

  const std::vector<Atom>& atom_list() const { return atoms_; }
  double coefficient() const { return coefficient_; }
  double alpha() const { return alpha_; }
  double origin_index() const;

 private:
  Kind kind_ = Kind::Zero;
  std::vector<Atom> atoms_;
  double coefficient_ = 0.0;
  double alpha_ = 0.0;
  std::function<double(double)> density_;
  std::optional<NearZero> near_zero_;
  bool touches_zero_ = false;
};

struct BrownianFamily {};
struct PoissonFamily {
  double rate = 1.0;
  double jump = 1.0;
};
struct FixedJump {
  double size;
};
struct ExponentialJump {
  double rate;
  bool negative = false;
};
struct NormalJump {
  double mean;
  double sd;
};
using JumpLaw = std::variant<FixedJump, ExponentialJump, NormalJump>;
struct CompoundPoissonFamily {
  double rate;
  JumpLaw jump;
};
struct StableFamily {
  double alpha;
  double scale;
  double skew;
};
struct GammaFamily {
  double shape;
  double rate;
};
struct CgmyFamily {
  double C;
  double G;
  double M;
  double Y;
};
struct AtomMeasure {
  std::vector<Atom> atoms;
};
// Two-sided density nu(x), x != 0, with its origin behaviour declared per side.
struct DensityMeasure {
  std::function<double(double)> density;
  std::optional<NearZero> near_zero_positive;
  std::optional<NearZero> near_zero_negative;
  bool touches_zero_positive = true;
  bool touches_zero_negative = true;
};

using LevyMeasureSpec = std::variant<BrownianFamily, PoissonFamily, CompoundPoissonFamily, StableFamily,
                                     GammaFamily, CgmyFamily, AtomMeasure, DensityMeasure>;

class LevyTriplet {
 public:
  LevyTriplet(double A, double gamma, LevyMeasureSpec measure);

  double A() const { return A_; }
  double gamma() const { return gamma_; }
  const LevyMeasureSpec& measure() const { return spec_; }
  const HalfLineMeasure& positive() const { return positive_; }
  const HalfLineMeasure& negative() const { return negative_; }
  std::string family() const;

  // Integral of x over 0 < |x| < 1; requires finite variation.
  double small_jump_mean() const;

 private:
  double A_;
  double gamma_;
  LevyMeasureSpec spec_;
  HalfLineMeasure positive_;
  HalfLineMeasure negative_;
};

// Tail coefficients c+ and c- of a stable measure c+- |x|^(-1-alpha).
struct StableCoefficients {
  double c_plus;
  double c_minus;
};
StableCoefficients stable_coefficients(const StableFamily& f);

enum class ProcessType { TypeI, TypeII };
enum class SupportKind { FullLine, HalfLineUp, HalfLineDown };

struct SupportDescriptor {
  SupportKind kind;
  // Deterministic drift of the pure-jump part, gamma minus the small-jump mean;
  // only meaningful for half-line supports.
  double offset_rate;
};

struct ValidationReport {
  ProcessType type = ProcessType::TypeII;
  SupportDescriptor support{SupportKind::FullLine, 0.0};
  bool symmetric = false;
  bool spectral_allowed = true;
  bool domain_in_support = true;
  std::vector<std::string> warnings;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty() && warnings.empty(); }
};

ProcessType classify_type(const LevyTriplet& t);
SupportDescriptor support_of(const LevyTriplet& t);
bool is_symmetric(const LevyTriplet& t);
cplx levy_symbol(const LevyTriplet& t, double z);
// Symbol through the jump-measure integral, bypassing family closed forms.
cplx levy_symbol_quadrature(const LevyTriplet& t, double z);
ValidationReport validate_problem(const LevyTriplet& t, const Domain& domain);

// Reference parameterizations of the built-in families, used by the property
// suites. All are type II; all but the gamma subordinator have full-line
// support.
struct NamedTriplet {
  std::string name;
  LevyTriplet triplet;
};
std::vector<NamedTriplet> builtin_triplets();

std::string to_string(ProcessType type);
std::string to_string(SupportKind kind);

}  // namespace levyruin
