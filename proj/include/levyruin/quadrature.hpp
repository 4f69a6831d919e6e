#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "levyruin/error.hpp"

// Thin wrappers over Boost.Math adaptive quadrature that throw on a poor
// error estimate instead of returning a silently inaccurate value.
namespace levyruin::quad {

inline constexpr double kRequestTol = 1e-12;
inline constexpr double kAcceptTol = 1e-8;

inline void check(double value, double error, double l1, const char* what, double abs_floor = 0.0) {
  if (!std::isfinite(value) || error > std::max(kAcceptTol * std::max(l1, 1e-280), abs_floor)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " (value %.6e, error %.3e, L1 %.3e)", value, error, l1);
    throw Error(ErrorKind::Quadrature, std::string("quadrature did not converge: ") + what + buf);
  }
}

// Adaptive 31-point Gauss-Kronrod on a finite interval. The interval is mapped
// onto [0, 1] by hand: Boost's own affine map loses digits on short intervals
// away from the origin.
// Errors below abs_floor are accepted regardless of the integrand's L1 norm.
template <class F>
double interval(F&& f, double a, double b, const char* what, double abs_floor = 0.0) {
  if (!(b > a)) return 0.0;
  const double width = b - a;
  auto g = [&](double t) { return f(a + width * t) * width; };
  double error = 0.0, l1 = 0.0;
  // Integrands that have underflowed would otherwise drive bisection to full depth.
  const double coarse = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      g, 0.0, 1.0, 0, kRequestTol, &error, &l1);
  if (l1 < 1e-250 && error < 1e-250) return coarse;
  // Bisection aims at a relative tolerance only, so an absolute floor has to be honoured here.
  if (std::isfinite(coarse) && error <= std::max(kRequestTol * l1, abs_floor)) return coarse;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      g, 0.0, 1.0, 20, kRequestTol, &error, &l1);
  try {
    check(v, error, l1, what, abs_floor);
  } catch (const Error& e) {
    throw Error(ErrorKind::Quadrature, std::string(e.what()) + " on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return v;
}

// Integral over [a, b] with 0 < a < b; wide ranges go through s = e^t.
template <class F>
double positive_interval(F&& f, double a, double b, const char* what) {
  if (!(b > a)) return 0.0;
  if (b <= 4.0 * a) return interval(f, a, b, what);
  auto g = [&](double t) {
    const double s = std::exp(t);
    return f(s) * s;
  };
  return interval(g, std::log(a), std::log(b), what);
}

// Integral over (0, b] of f with f(s) ~ c s^(q-1) as s -> 0, q > 0. The
// substitution s = e^t turns the endpoint singularity into exponential decay.
template <class F>
double from_zero(F&& f, double b, double q, const char* what) {
  if (!(b > 0.0)) return 0.0;
  if (!(q > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, std::string("non-integrable origin: ") + what);
  }
  const double top = std::log(b);
  const double bottom = std::max(top - 40.0 / q, -700.0);
  auto g = [&](double t) {
    const double s = std::exp(t);
    const double v = f(s) * s;
    return std::isfinite(v) ? v : 0.0;
  };
  const double s_low = std::exp(bottom);
  const double remainder = f(s_low) * s_low / q;
  return interval(g, bottom, top, what) + (std::isfinite(remainder) ? remainder : 0.0);
}

// Integral over [a, infinity) with a > 0.
template <class F>
double to_infinity(F&& f, double a, const char* what) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0, l1 = 0.0;
  const double v = integrator.integrate(f, a, std::numeric_limits<double>::infinity(),
                                        kRequestTol, &error, &l1);
  check(v, error, l1, what);
  return v;
}

}  // namespace levyruin::quad
