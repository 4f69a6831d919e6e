#include "levyruin/levy_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "levyruin/error.hpp"
#include "levyruin/quadrature.hpp"

namespace levyruin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286061;
const cplx I(0.0, 1.0);

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// sin(x) - x without cancellation: the Taylor series below |x| = 1.
double sin_minus_identity(double x) {
  if (std::abs(x) >= 1.0) return std::sin(x) - x;
  const double x2 = x * x;
  double term = -x * x2 / 6.0, sum = term;
  for (int k = 4; std::abs(term) > 1e-18 * std::abs(sum); k += 2) {
    term *= -x2 / (k * (k + 1));
    sum += term;
  }
  return sum;
}

// Integral of e^{izs} g(s) over [1, inf) for a smooth, eventually decaying g.
// Whole periods are integrated until g is negligible, then the remaining tail
// is closed by two terms of integration by parts.
cplx oscillatory_tail(const std::function<double(double)>& g, double z) {
  const double period = 2.0 * std::numbers::pi / std::abs(z);
  const double scale = std::max(std::abs(g(1.0)), 1e-300);
  double re = 0.0, im = 0.0;
  double b = 1.0;
  for (int k = 0;; ++k) {
    const double a = 1.0 + k * period;
    b = a + period;
    const double floor = 1e-12 * scale;
    re += quad::interval([&](double s) { return std::cos(z * s) * g(s); }, a, b, "symbol tail", floor);
    im += quad::interval([&](double s) { return std::sin(z * s) * g(s); }, a, b, "symbol tail", floor);
    if (std::abs(g(b)) <= 1e-12 * scale || b >= 2000.0) break;
    if (k > 200000) throw Error(ErrorKind::Quadrature, "symbol integration failure: tail panels");
  }
  const double eta = 1e-4;
  const double slope = (g(b * (1 + eta)) - g(b * (1 - eta))) / (2 * b * eta);
  const cplx phase = std::exp(I * z * b);
  const cplx iz = I * z;
  return cplx(re, im) - phase * g(b) / iz + phase * slope / (iz * iz);
}

}  // namespace

HalfLineMeasure HalfLineMeasure::atoms(std::vector<Atom> atoms) {
  HalfLineMeasure m;
  if (atoms.empty()) return m;
  for (const auto& a : atoms) {
    if (!(a.position > 0.0) || !std::isfinite(a.position) || !(a.mass > 0.0) || !std::isfinite(a.mass)) {
      throw Error(ErrorKind::InvalidArgument, "atoms need positive position and mass on a half-line");
    }
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.position < y.position; });
  m.kind_ = Kind::Atoms;
  m.atoms_ = std::move(atoms);
  return m;
}

HalfLineMeasure HalfLineMeasure::power_law(double coefficient, double alpha) {
  HalfLineMeasure m;
  if (coefficient == 0.0) return m;
  if (!(coefficient > 0.0) || !(alpha > 0.0 && alpha < 2.0)) {
    throw Error(ErrorKind::InvalidArgument, "power law needs coefficient > 0 and alpha in (0,2)");
  }
  m.kind_ = Kind::PowerLaw;
  m.coefficient_ = coefficient;
  m.alpha_ = alpha;
  m.touches_zero_ = true;
  return m;
}

HalfLineMeasure HalfLineMeasure::density(std::function<double(double)> f, std::optional<NearZero> near_zero,
                                         bool touches_zero) {
  if (!f) throw Error(ErrorKind::InvalidArgument, "density callable is empty");
  if (near_zero && !(near_zero->index < 2.0)) {
    throw Error(ErrorKind::InvalidArgument, "origin index must be below 2 for a Levy measure");
  }
  HalfLineMeasure m;
  m.kind_ = Kind::Density;
  m.density_ = [f = std::move(f)](double s) {
    const double v = f(s);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, "density must be finite and nonnegative, failed at " +
                                                  std::to_string(s));
    }
    return v;
  };
  m.near_zero_ = near_zero;
  m.touches_zero_ = touches_zero;
  return m;
}

double HalfLineMeasure::origin_index() const {
  switch (kind_) {
    case Kind::Zero:
    case Kind::Atoms:
      return -1.0;
    case Kind::PowerLaw:
      return alpha_;
    case Kind::Density:
      if (!near_zero_) {
        throw Error(ErrorKind::Unclassifiable,
                    "unclassifiable measure: density has no declared behaviour near 0");
      }
      return near_zero_->index;
  }
  return 0.0;
}

bool HalfLineMeasure::finite_mass() const { return origin_index() < 0.0; }
bool HalfLineMeasure::finite_variation() const { return origin_index() < 1.0; }

double HalfLineMeasure::moment(int p, double lo, double hi) const {
  lo = std::max(lo, 0.0);
  if (!(hi > lo)) return 0.0;
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Atoms: {
      double sum = 0.0;
      for (const auto& a : atoms_) {
        if (a.position >= lo && a.position < hi) sum += a.mass * std::pow(a.position, p);
      }
      return sum;
    }
    case Kind::PowerLaw: {
      const double e = p - alpha_;
      if ((lo == 0.0 && e <= 0.0) || (std::isinf(hi) && e >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "divergent power-law moment");
      }
      if (e == 0.0) return coefficient_ * std::log(hi / lo);
      const double top = std::isinf(hi) ? 0.0 : std::pow(hi, e);
      const double bottom = lo == 0.0 ? 0.0 : std::pow(lo, e);
      return coefficient_ * (top - bottom) / e;
    }
    case Kind::Density: {
      auto f = [&](double s) { return std::pow(s, p) * density_(s); };
      double sum = 0.0;
      if (lo == 0.0) {
        const double q = p - origin_index();
        if (!(q > 0.0)) throw Error(ErrorKind::InvalidArgument, "divergent density moment at 0");
        const double cut = std::min(hi, 1.0);
        sum += quad::from_zero(f, cut, q, "density moment near 0");
        lo = cut;
        if (!(hi > lo)) return sum;
      }
      if (std::isinf(hi)) {
        if (lo < 1.0) {
          sum += quad::positive_interval(f, lo, 1.0, "density moment");
          lo = 1.0;
        }
        return sum + quad::to_infinity(f, lo, "density tail moment");
      }
      return sum + quad::positive_interval(f, lo, hi, "density moment");
    }
  }
  return 0.0;
}

double HalfLineMeasure::mass_above(double x) const {
  if (kind_ == Kind::Atoms) {
    double sum = 0.0;
    for (const auto& a : atoms_) {
      if (a.position > x) sum += a.mass;
    }
    return sum;
  }
  if (kind_ == Kind::Zero) return 0.0;
  if (x <= 0.0) return finite_mass() ? moment(0, 0.0, kInf) : kInf;
  if (kind_ == Kind::PowerLaw) return coefficient_ * std::pow(x, -alpha_) / alpha_;
  return moment(0, x, kInf);
}

double HalfLineMeasure::mass_from(double x) const {
  if (kind_ == Kind::Atoms) {
    double sum = 0.0;
    for (const auto& a : atoms_) {
      if (a.position >= x) sum += a.mass;
    }
    return sum;
  }
  return mass_above(x);
}

double HalfLineMeasure::density_at(double s) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::PowerLaw:
      return coefficient_ * std::pow(s, -1.0 - alpha_);
    case Kind::Density:
      return density_(s);
    case Kind::Atoms:
      break;
  }
  throw Error(ErrorKind::InvalidArgument, "atomic measure has no density");
}

cplx HalfLineMeasure::transform(double z) const {
  if (z == 0.0) return 0.0;
  if (kind_ == Kind::PowerLaw) {
    const double c = coefficient_;
    if (alpha_ == 1.0) {
      return c * cplx(-std::numbers::pi * std::abs(z) / 2.0, -z * std::log(std::abs(z)) + (1.0 - kEulerGamma) * z);
    }
    const cplx power = std::pow(cplx(0.0, -z), alpha_);
    return c * (std::tgamma(-alpha_) * power - I * z / (1.0 - alpha_));
  }
  return transform_by_quadrature(z);
}

cplx HalfLineMeasure::transform_by_quadrature(double z) const {
  if (z == 0.0) return 0.0;
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Atoms: {
      cplx sum = 0.0;
      for (const auto& a : atoms_) {
        const double x = z * a.position;
        const double re = -2.0 * std::pow(std::sin(x / 2.0), 2);
        const double im = a.position < 1.0 ? sin_minus_identity(x) : std::sin(x);
        sum += a.mass * cplx(re, im);
      }
      return sum;
    }
    case Kind::PowerLaw:
    case Kind::Density:
      break;
  }
  const double index = origin_index();
  auto nu = [&](double s) { return density_at(s); };
  const double near_re = quad::from_zero(
      [&](double s) { return -2.0 * std::pow(std::sin(z * s / 2.0), 2) * nu(s); }, 1.0, 2.0 - index,
      "symbol near origin");
  const double near_im = quad::from_zero([&](double s) { return sin_minus_identity(z * s) * nu(s); }, 1.0,
                                         3.0 - index, "symbol near origin");
  const cplx far = oscillatory_tail(nu, z) - mass_from(1.0);
  return cplx(near_re, near_im) + far;
}

bool HalfLineMeasure::same_as(const HalfLineMeasure& other) const {
  auto close = [](double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); };
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::Zero:
      return true;
    case Kind::Atoms:
      if (atoms_.size() != other.atoms_.size()) return false;
      for (std::size_t k = 0; k < atoms_.size(); ++k) {
        if (!close(atoms_[k].position, other.atoms_[k].position, 1e-14) ||
            !close(atoms_[k].mass, other.atoms_[k].mass, 1e-14)) {
          return false;
        }
      }
      return true;
    case Kind::PowerLaw:
      return alpha_ == other.alpha_ && close(coefficient_, other.coefficient_, 1e-14);
    case Kind::Density:
      if (near_zero_.has_value() != other.near_zero_.has_value()) return false;
      if (near_zero_ && near_zero_->index != other.near_zero_->index) return false;
      for (int k = 0; k <= 48; ++k) {
        const double s = std::pow(10.0, -6.0 + 0.25 * k);
        if (!close(density_(s), other.density_(s), 1e-12)) return false;
      }
      return true;
  }
  return false;
}

StableCoefficients stable_coefficients(const StableFamily& f) {
  double total;
  if (f.alpha == 1.0) {
    total = 2.0 * f.scale / std::numbers::pi;
  } else {
    total = std::pow(f.scale, f.alpha) / (-std::tgamma(-f.alpha) * std::cos(std::numbers::pi * f.alpha / 2.0));
  }
  return {total * (1.0 + f.skew) / 2.0, total * (1.0 - f.skew) / 2.0};
}

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, message);
}

std::pair<HalfLineMeasure, HalfLineMeasure> split_atoms(const std::vector<Atom>& atoms) {
  std::vector<Atom> up, down;
  for (const auto& a : atoms) {
    require(a.position != 0.0 && std::isfinite(a.position), "atom positions must be finite and nonzero");
    require(a.mass > 0.0 && std::isfinite(a.mass), "atom masses must be positive");
    if (a.position > 0.0) {
      up.push_back(a);
    } else {
      down.push_back({-a.position, a.mass});
    }
  }
  return {HalfLineMeasure::atoms(up), HalfLineMeasure::atoms(down)};
}

double normal_pdf(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

LevyTriplet::LevyTriplet(double A, double gamma, LevyMeasureSpec measure)
    : A_(A), gamma_(gamma), spec_(std::move(measure)) {
  require(A_ >= 0.0 && std::isfinite(A_), "diffusion coefficient must be finite and >= 0");
  require(std::isfinite(gamma_), "drift must be finite");
  std::visit(
      overloaded{
          [](const BrownianFamily&) {},
          [&](const PoissonFamily& f) {
            require(f.rate > 0.0 && f.jump != 0.0, "Poisson needs rate > 0 and nonzero jump");
            std::tie(positive_, negative_) = split_atoms({{f.jump, f.rate}});
          },
          [&](const CompoundPoissonFamily& f) {
            require(f.rate > 0.0 && std::isfinite(f.rate), "compound Poisson needs rate > 0");
            const double rate = f.rate;
            std::visit(overloaded{
                           [&](const FixedJump& j) {
                             std::tie(positive_, negative_) = split_atoms({{j.size, rate}});
                           },
                           [&](const ExponentialJump& j) {
                             require(j.rate > 0.0, "exponential jump law needs rate > 0");
                             const double beta = j.rate;
                             auto side = HalfLineMeasure::density(
                                 [rate, beta](double s) { return rate * beta * std::exp(-beta * s); },
                                 NearZero{-1.0}, true);
                             (j.negative ? negative_ : positive_) = side;
                           },
                           [&](const NormalJump& j) {
                             require(j.sd > 0.0, "normal jump law needs sd > 0");
                             const double mean = j.mean, sd = j.sd;
                             positive_ = HalfLineMeasure::density(
                                 [=](double s) { return rate * normal_pdf(s, mean, sd); }, NearZero{-1.0}, true);
                             negative_ = HalfLineMeasure::density(
                                 [=](double s) { return rate * normal_pdf(-s, mean, sd); }, NearZero{-1.0}, true);
                           },
                       },
                       f.jump);
          },
          [&](const StableFamily& f) {
            require(f.alpha > 0.0 && f.alpha < 2.0, "stable index must lie in (0,2)");
            require(f.scale > 0.0, "stable scale must be positive");
            require(f.skew >= -1.0 && f.skew <= 1.0, "stable skew must lie in [-1,1]");
            const auto c = stable_coefficients(f);
            positive_ = HalfLineMeasure::power_law(c.c_plus, f.alpha);
            negative_ = HalfLineMeasure::power_law(c.c_minus, f.alpha);
          },
          [&](const GammaFamily& f) {
            require(f.shape > 0.0 && f.rate > 0.0, "gamma family needs shape > 0 and rate > 0");
            const double a = f.shape, b = f.rate;
            positive_ = HalfLineMeasure::density([a, b](double s) { return a * std::exp(-b * s) / s; },
                                                 NearZero{0.0}, true);
          },
          [&](const CgmyFamily& f) {
            require(f.C > 0.0 && f.G > 0.0 && f.M > 0.0 && f.Y < 2.0, "CGMY needs C,G,M > 0 and Y < 2");
            const double C = f.C, G = f.G, M = f.M, Y = f.Y;
            positive_ = HalfLineMeasure::density(
                [=](double s) { return C * std::exp(-M * s) * std::pow(s, -1.0 - Y); }, NearZero{Y}, true);
            negative_ = HalfLineMeasure::density(
                [=](double s) { return C * std::exp(-G * s) * std::pow(s, -1.0 - Y); }, NearZero{Y}, true);
          },
          [&](const AtomMeasure& m) { std::tie(positive_, negative_) = split_atoms(m.atoms); },
          [&](const DensityMeasure& m) {
            require(static_cast<bool>(m.density), "density callable is empty");
            auto f = m.density;
            positive_ = HalfLineMeasure::density([f](double s) { return f(s); }, m.near_zero_positive,
                                                 m.touches_zero_positive);
            negative_ = HalfLineMeasure::density([f](double s) { return f(-s); }, m.near_zero_negative,
                                                 m.touches_zero_negative);
          },
      },
      spec_);
}

std::string LevyTriplet::family() const {
  return std::visit(overloaded{
                        [](const BrownianFamily&) { return std::string("brownian"); },
                        [](const PoissonFamily&) { return std::string("poisson"); },
                        [](const CompoundPoissonFamily&) { return std::string("compound_poisson"); },
                        [](const StableFamily& f) {
                          return std::string(f.alpha == 1.0 && f.skew == 0.0 ? "cauchy" : "stable");
                        },
                        [](const GammaFamily&) { return std::string("gamma"); },
                        [](const CgmyFamily&) { return std::string("cgmy"); },
                        [](const AtomMeasure&) { return std::string("atoms"); },
                        [](const DensityMeasure&) { return std::string("density"); },
                    },
                    spec_);
}

double LevyTriplet::small_jump_mean() const {
  if (!positive_.finite_variation() || !negative_.finite_variation()) {
    throw Error(ErrorKind::InvalidArgument, "small-jump mean diverges for infinite variation");
  }
  return positive_.moment(1, 0.0, 1.0) - negative_.moment(1, 0.0, 1.0);
}

ProcessType classify_type(const LevyTriplet& t) {
  if (t.A() > 0.0) return ProcessType::TypeII;
  const bool finite = t.positive().finite_mass() && t.negative().finite_mass();
  return finite ? ProcessType::TypeI : ProcessType::TypeII;
}

SupportDescriptor support_of(const LevyTriplet& t) {
  if (t.A() > 0.0) return {SupportKind::FullLine, 0.0};
  if (!t.positive().finite_variation() || !t.negative().finite_variation()) return {SupportKind::FullLine, 0.0};
  const double offset = t.gamma() - t.small_jump_mean();
  const bool up = !t.positive().is_zero();
  const bool down = !t.negative().is_zero();
  if (up && down) return {SupportKind::FullLine, 0.0};
  if (up) return {SupportKind::HalfLineUp, offset};
  if (down) return {SupportKind::HalfLineDown, offset};
  // Pure drift: record the half-line the path moves into.
  return {offset >= 0.0 ? SupportKind::HalfLineUp : SupportKind::HalfLineDown, offset};
}

bool is_symmetric(const LevyTriplet& t) { return t.gamma() == 0.0 && t.positive().same_as(t.negative()); }

namespace {

cplx cgmy_side(double C, double rate, double Y, double z, const HalfLineMeasure& side) {
  const cplx iz = I * z;
  const cplx core = C * std::tgamma(-Y) *
                    (std::pow(cplx(rate, -z), Y) - std::pow(rate, Y) + iz * Y * std::pow(rate, Y - 1.0));
  return core + iz * side.moment(1, 1.0, kInf);
}

cplx jump_characteristic(const JumpLaw& law, double z) {
  return std::visit(overloaded{
                        [&](const FixedJump& j) { return std::exp(I * z * j.size); },
                        [&](const ExponentialJump& j) {
                          const double sign = j.negative ? -1.0 : 1.0;
                          return j.rate / (j.rate - I * sign * z);
                        },
                        [&](const NormalJump& j) {
                          return std::exp(I * j.mean * z - 0.5 * j.sd * j.sd * z * z);
                        },
                    },
                    law);
}

cplx jump_part(const LevyTriplet& t, double z) {
  return std::visit(
      overloaded{
          [&](const GammaFamily& f) {
            return -f.shape * std::log(1.0 - I * z / f.rate) - I * z * f.shape * (1.0 - std::exp(-f.rate)) / f.rate;
          },
          [&](const CgmyFamily& f) {
            if (f.Y > 0.0 && f.Y != 1.0) {
              return cgmy_side(f.C, f.M, f.Y, z, t.positive()) + cgmy_side(f.C, f.G, f.Y, -z, t.negative());
            }
            return t.positive().transform(z) + t.negative().transform(-z);
          },
          [&](const CompoundPoissonFamily& f) {
            return f.rate * (jump_characteristic(f.jump, z) - 1.0) - I * z * t.small_jump_mean();
          },
          [&](const auto&) { return t.positive().transform(z) + t.negative().transform(-z); },
      },
      t.measure());
}

}  // namespace

cplx levy_symbol(const LevyTriplet& t, double z) {
  return 0.5 * t.A() * z * z - I * t.gamma() * z - jump_part(t, z);
}

cplx levy_symbol_quadrature(const LevyTriplet& t, double z) {
  const cplx jumps = t.positive().transform_by_quadrature(z) + t.negative().transform_by_quadrature(-z);
  return 0.5 * t.A() * z * z - I * t.gamma() * z - jumps;
}

ValidationReport validate_problem(const LevyTriplet& t, const Domain& domain) {
  ValidationReport r;
  r.type = classify_type(t);
  r.support = support_of(t);
  r.symmetric = is_symmetric(t);
  if (r.type == ProcessType::TypeI) {
    r.spectral_allowed = false;
    r.warnings.push_back("type I process: the spectral pipeline requires A > 0 or an infinite jump measure");
  }
  // The one-sided support rule applies only when small jumps accumulate at 0.
  const double offset = r.support.offset_rate;
  if (r.support.kind == SupportKind::HalfLineUp && t.positive().touches_zero() && offset >= 0.0 &&
      domain.lower() < 0.0) {
    r.domain_in_support = false;
    r.violations.push_back("domain outside support: paths never go below their start");
  }
  if (r.support.kind == SupportKind::HalfLineDown && t.negative().touches_zero() && offset <= 0.0 &&
      domain.upper() > 0.0) {
    r.domain_in_support = false;
    r.violations.push_back("domain outside support: paths never go above their start");
  }
  return r;
}

std::vector<NamedTriplet> builtin_triplets() {
  std::vector<NamedTriplet> out;
  out.push_back({"brownian", LevyTriplet(1.0, 0.0, BrownianFamily{})});
  out.push_back({"brownian_drift", LevyTriplet(1.0, 0.5, BrownianFamily{})});
  out.push_back({"cauchy", LevyTriplet(0.0, 0.0, StableFamily{1.0, 1.0, 0.0})});
  out.push_back({"stable_0.5", LevyTriplet(0.0, 0.0, StableFamily{0.5, 1.0, 0.0})});
  out.push_back({"stable_1.5", LevyTriplet(0.0, 0.0, StableFamily{1.5, 1.0, 0.0})});
  out.push_back({"stable_1.5_skewed", LevyTriplet(0.0, 0.0, StableFamily{1.5, 1.0, 0.5})});
  // Pure subordinator: zero drift offset, so [-1, 1] leaves its support.
  const double gamma_offset = LevyTriplet(0.0, 0.0, GammaFamily{1.0, 1.0}).small_jump_mean();
  out.push_back({"gamma", LevyTriplet(0.0, gamma_offset, GammaFamily{1.0, 1.0})});
  out.push_back({"cgmy_0.5", LevyTriplet(0.0, 0.0, CgmyFamily{1.0, 5.0, 5.0, 0.5})});
  out.push_back({"cgmy_1.5", LevyTriplet(0.0, 0.0, CgmyFamily{1.0, 2.0, 4.0, 1.5})});
  out.push_back({"jump_diffusion", LevyTriplet(1.0, 0.0, CompoundPoissonFamily{1.0, NormalJump{0.0, 0.5}})});
  out.push_back({"jump_diffusion_exp", LevyTriplet(0.5, -0.5, CompoundPoissonFamily{2.0, ExponentialJump{3.0, false}})});
  return out;
}

std::string to_string(ProcessType type) { return type == ProcessType::TypeI ? "TypeI" : "TypeII"; }

std::string to_string(SupportKind kind) {
  switch (kind) {
    case SupportKind::FullLine:
      return "FullLine";
    case SupportKind::HalfLineUp:
      return "HalfLineUp";
    case SupportKind::HalfLineDown:
      return "HalfLineDown";
  }
  return "";
}

}  // namespace levyruin
