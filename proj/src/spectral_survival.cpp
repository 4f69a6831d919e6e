#include "levyruin/spectral_survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "levyruin/error.hpp"

namespace levyruin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PowerResult {
  double value;
  Vector vector;
  int iterations;
};

PowerResult power_iterate(const Matrix& M, double rel_tol, int max_iterations) {
  Vector v = Vector::Ones(M.rows());
  v /= v.norm();
  double previous = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    Vector w = M * v;
    const double rayleigh = v.dot(w);
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::Numerical, "power iteration produced a zero or non-finite vector");
    }
    v = w / norm;
    if (it > 1 && std::abs(rayleigh - previous) <= rel_tol * std::abs(rayleigh)) {
      if (v.sum() < 0.0) v = -v;
      return {rayleigh, v, it};
    }
    previous = rayleigh;
  }
  throw Error(ErrorKind::Convergence,
              "dominance failure: power iteration did not converge (complex dominant pair suggests an assembly bug)");
}

double min_ratio(const Vector& v) { return v.minCoeff() / v.maxCoeff(); }

}  // namespace

EigenResult principal_eigenpair(const Matrix& B, double rel_tol, int max_iterations) {
  if (B.rows() == 0 || B.rows() != B.cols()) throw Error(ErrorKind::InvalidArgument, "B must be square and nonempty");
  const PowerResult right = power_iterate(B, rel_tol, max_iterations);
  const Matrix Bt = B.transpose();
  const PowerResult left = power_iterate(Bt, rel_tol, max_iterations);

  EigenResult r;
  r.lambda1 = right.value;
  r.iterations = std::max(right.iterations, left.iterations);
  if (!(r.lambda1 > 0.0)) throw Error(ErrorKind::Numerical, "principal eigenvalue is not positive");
  Vector g = right.vector / right.vector.cwiseAbs().maxCoeff();
  Vector h = left.vector;
  r.index_cosine = g.dot(h) / (g.norm() * h.norm());
  r.index_one = r.index_cosine > 1e-8;
  if (!r.index_one) {
    throw Error(ErrorKind::Numerical, "left and right principal vectors are orthogonal: eigenvalue index exceeds 1");
  }
  h /= g.dot(h);
  r.right_residual = (B * g - r.lambda1 * g).cwiseAbs().maxCoeff() / (r.lambda1 * g.cwiseAbs().maxCoeff());
  r.left_residual = (Bt * h - r.lambda1 * h).cwiseAbs().maxCoeff() / (r.lambda1 * h.cwiseAbs().maxCoeff());
  r.g1_min_ratio = min_ratio(g);
  r.h1_min_ratio = min_ratio(h);
  r.g1 = std::move(g);
  r.h1_density = std::move(h);
  return r;
}

LeadingSpectrum leading_spectrum(const Matrix& B, int m, double lambda1, std::uint64_t seed, int max_iterations) {
  const Eigen::Index n = B.rows();
  if (m < 1 || m > 20) throw Error(ErrorKind::InvalidArgument, "leading spectrum size must be in 1..20");
  if (m > n) throw Error(ErrorKind::InvalidArgument, "leading spectrum size exceeds the matrix size");
  const Eigen::Index p = std::min<Eigen::Index>(n, m + 5);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix Q(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) Q(i, j) = normal(rng);
  }
  auto orthonormalize = [&](const Matrix& Z) {
    Eigen::HouseholderQR<Matrix> qr(Z);
    return Matrix(qr.householderQ() * Matrix::Identity(n, p));
  };
  Q = orthonormalize(Q);

  auto ritz = [&](const Matrix& H) {
    Eigen::EigenSolver<Matrix> es(H, false);
    std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + p);
    std::sort(v.begin(), v.end(), [](const cplx& a, const cplx& b) {
      if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
      return a.imag() > b.imag();
    });
    return v;
  };

  LeadingSpectrum out;
  std::vector<cplx> previous, current;
  std::vector<double> change(static_cast<std::size_t>(m), kInf);
  const double scale = std::abs(lambda1);
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Matrix Z = B * Q;
    current = ritz(Q.transpose() * Z);
    bool converged = !previous.empty();
    for (int k = 0; k < m && !previous.empty(); ++k) {
      // Conjugate pairs may swap order between sweeps; compare against the
      // nearest previous value.
      double best = kInf;
      for (int j = 0; j < p; ++j) best = std::min(best, std::abs(current[k] - previous[j]));
      change[k] = best;
      if (best > 1e-10 * scale) converged = false;
    }
    if (converged) break;
    previous = current;
    Q = orthonormalize(Z);
  }
  out.iterations = it;
  int kept = m;
  if (it == max_iterations) {
    kept = 0;
    while (kept < m && change[kept] <= 1e-10 * scale) ++kept;
    out.complete = false;
    out.warnings.push_back("deflation stalled: " + std::to_string(kept) + " of " + std::to_string(m) +
                           " eigenvalues converged");
  }
  for (int k = 0; k < kept; ++k) {
    LeadingEigenvalue e{current[k], 0};
    for (int j = 0; j < p; ++j) {
      if (std::abs(current[j] - current[k]) <= 1e-6 * scale) ++e.multiplicity;
    }
    out.values.push_back(e);
  }
  out.disk_margin = kInf;
  for (const auto& e : out.values) {
    out.disk_margin = std::min(out.disk_margin, 0.5 * lambda1 - std::abs(e.value - 0.5 * lambda1));
    out.sector_angle = std::max(out.sector_angle, std::abs(std::arg(e.value)));
    out.modulus_ratio = std::max(out.modulus_ratio, std::abs(e.value) / lambda1);
  }
  if (out.values.empty()) out.disk_margin = 0.0;
  return out;
}

bool disk_contains(const LeadingSpectrum& s, double lambda1, double tol) {
  return s.disk_margin >= -tol * 0.5 * lambda1;
}

SectorialityReport sectoriality_check(const Matrix& S, int trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorKind::InvalidArgument, "sectoriality check needs at least one trial");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::Index n = S.rows();
  SectorialityReport r;
  r.trials = trials;
  r.min_real = kInf;
  Vector a(n), b(n);
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
    }
    const double norm2 = a.squaredNorm() + b.squaredNorm();
    // f = a + i b; (S f, f) = f^H S f.
    const Vector Sa = S * a, Sb = S * b;
    const double re = (a.dot(Sa) + b.dot(Sb)) / norm2;
    const double im = (a.dot(Sb) - b.dot(Sa)) / norm2;
    r.min_real = std::min(r.min_real, re);
    r.max_angle = std::max(r.max_angle, std::abs(std::atan2(im, re)));
  }
  r.strongly_sectorial = r.min_real > 0.0 && r.max_angle < 0.5 * std::numbers::pi * (1.0 - 1e-3);
  return r;
}

namespace {

Matrix pade6(const Matrix& A) {
  // c_k = (12 - k)! 6! / (12! k! (6 - k)!)
  static constexpr double c[] = {1.0,
                                 1.0 / 2.0,
                                 5.0 / 44.0,
                                 1.0 / 66.0,
                                 1.0 / 792.0,
                                 1.0 / 15840.0,
                                 1.0 / 665280.0};
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix even = c[0] * I + c[2] * A2 + c[4] * A4 + c[6] * A6;
  const Matrix odd = A * (c[1] * I + c[3] * A2 + c[5] * A4);
  const Matrix num = even + odd;
  const Matrix den = even - odd;
  return den.partialPivLu().solve(num);
}

Matrix scaled_exp(const Matrix& A, int s) {
  Matrix E = pade6(A / std::ldexp(1.0, s));
  for (int k = 0; k < s; ++k) E = E * E;
  if (!E.allFinite()) throw Error(ErrorKind::Numerical, "matrix exponential overflowed: the generator is not dissipative");
  return E;
}

}  // namespace

Matrix expm(const Matrix& A, double tol, ExpmInfo* info) {
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
  int s = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  Matrix E = scaled_exp(A, s);
  for (int guard = 0; guard < 40; ++guard) {
    Matrix next = scaled_exp(A, s + 1);
    const double change = (next - E).cwiseAbs().maxCoeff();
    if (change <= tol) {
      if (info) *info = {s + 1, change};
      return next;
    }
    E = std::move(next);
    ++s;
  }
  throw Error(ErrorKind::Convergence, "matrix exponential refinements did not settle");
}

RateFit fit_log_survival(const std::vector<double>& times, const std::vector<double>& values, double lo, double hi) {
  std::vector<double> t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (values[i] >= lo && values[i] <= hi) {
      t.push_back(times[i]);
      y.push_back(std::log(values[i]));
    }
  }
  if (t.size() < 5) throw Error(ErrorKind::InvalidArgument, "rate fit window holds fewer than 5 points");
  const double n = static_cast<double>(t.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i];
    ym += y[i];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
  }
  RateFit f;
  const double slope = sty / stt;
  f.rate = -slope;
  f.intercept = ym - slope * tm;
  f.points = t.size();
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (f.intercept + slope * t[i]);
    rss += r * r;
  }
  const double s2 = rss / (n - 2.0);
  f.standard_error = std::sqrt(s2 / stt);
  f.intercept_standard_error = std::sqrt(s2 * (1.0 / n + tm * tm / stt));
  return f;
}

namespace {

std::size_t interior_index(const Grid& grid, double x0) {
  const auto i = grid.nearest_unknown(x0);
  if (!i) throw Error(ErrorKind::InvalidArgument, "starting point is outside the domain or on a boundary node");
  return *i;
}

}  // namespace

SurvivalCurve survival_curve(const Grid& grid, const Matrix& L, double x0, const std::vector<double>& times) {
  const std::size_t i0 = interior_index(grid, x0);
  SurvivalCurve c;
  c.x0 = x0;
  c.times = times;
  c.values.reserve(times.size());
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(L.cols());
  row[static_cast<Eigen::Index>(i0)] = 1.0;
  std::map<double, Matrix> steps;
  double t_prev = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (!(t >= t_prev)) throw Error(ErrorKind::InvalidArgument, "survival times must be nonnegative and increasing");
    const double dt = t - t_prev;
    if (dt > 0.0) {
      // Steps of a uniform grid differ in the last bits; treat them as one.
      auto it = steps.lower_bound(dt * (1.0 - 1e-12));
      if (it == steps.end() || it->first > dt * (1.0 + 1e-12)) it = steps.emplace(dt, expm(dt * L)).first;
      row = row * it->second;
    }
    c.values.push_back(std::clamp(row.sum(), 0.0, 1.0));
    t_prev = t;
  }
  try {
    c.fit = fit_log_survival(c.times, c.values);
  } catch (const Error&) {
    c.fit.reset();
  }
  return c;
}

double laplace_survival(const Grid& grid, const Matrix& B, double x0, double s) {
  if (!(s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "Laplace argument must be nonnegative");
  const auto i0 = static_cast<Eigen::Index>(interior_index(grid, x0));
  if (s == 0.0) return B.row(i0).sum();
  const Eigen::Index n = B.rows();
  const Matrix M = Matrix::Identity(n, n) + s * B;
  const Eigen::PartialPivLU<Matrix> lu(M);
  if (!(lu.rcond() > 1e-14)) throw Error(ErrorKind::Singular, "I + sB is singular: the quasi-potential is not sectorial");
  const Vector y = lu.solve(B * Vector::Ones(n));
  return y[i0];
}

double curve_laplace(const SurvivalCurve& curve, double s, double tail_rate) {
  const auto& t = curve.times;
  const auto& p = curve.values;
  if (t.size() < 2 || t.front() != 0.0) throw Error(ErrorKind::InvalidArgument, "curve must start at t = 0");
  auto f = [&](std::size_t k) { return std::exp(-s * t[k]) * p[k]; };
  const std::size_t steps = t.size() - 1;
  const double h = t[1] - t[0];
  bool uniform = steps % 2 == 0;
  for (std::size_t k = 1; uniform && k <= steps; ++k) {
    uniform = std::abs((t[k] - t[k - 1]) - h) <= 1e-9 * h;
  }
  double sum = 0.0;
  if (uniform) {
    for (std::size_t k = 0; k + 2 <= steps; k += 2) sum += h / 3.0 * (f(k) + 4.0 * f(k + 1) + f(k + 2));
  } else {
    for (std::size_t k = 0; k < steps; ++k) sum += 0.5 * (t[k + 1] - t[k]) * (f(k) + f(k + 1));
  }
  return sum + f(steps) / (s + tail_rate);
}

Asymptotics asymptotics(const Grid& grid, const EigenResult& eig, double x0, const std::optional<Domain>& subdomain) {
  Asymptotics a;
  a.rate = 1.0 / eig.lambda1;
  bool inside = false;
  for (const auto& p : grid.pieces()) inside = inside || (x0 >= p.lo && x0 <= p.hi);
  if (!inside) throw Error(ErrorKind::InvalidArgument, "starting point is outside the domain");
  const auto i0 = grid.nearest_unknown(x0);
  if (!i0) return a;
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.unknown_count(); ++i) {
    if (!subdomain || subdomain->contains(grid.unknown_position(i))) mass += eig.h1_density[static_cast<Eigen::Index>(i)];
  }
  a.coefficient = eig.g1[static_cast<Eigen::Index>(*i0)] * mass;
  return a;
}

std::vector<double> quasi_potential_bins(const Grid& grid, const Matrix& B, double x0, const std::vector<double>& edges) {
  const auto i0 = static_cast<Eigen::Index>(interior_index(grid, x0));
  std::vector<double> y, F;
  double total = 0.0;
  for (const auto& p : grid.pieces()) {
    y.push_back(p.lo);
    F.push_back(total);
    y.push_back(p.lo + 0.5 * p.h);
    F.push_back(total);
    for (std::size_t k = 1; k < p.cells; ++k) {
      total += B(i0, static_cast<Eigen::Index>(p.first_unknown + k - 1));
      y.push_back(p.lo + (static_cast<double>(k) + 0.5) * p.h);
      F.push_back(total);
    }
    y.push_back(p.hi);
    F.push_back(total);
  }
  auto cumulative = [&](double v) {
    if (v <= y.front()) return 0.0;
    if (v >= y.back()) return total;
    const auto k = static_cast<std::size_t>(std::upper_bound(y.begin(), y.end(), v) - y.begin());
    const double w = y[k] - y[k - 1];
    return w > 0.0 ? F[k - 1] + (F[k] - F[k - 1]) * (v - y[k - 1]) / w : F[k];
  };
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) out.push_back(cumulative(edges[k + 1]) - cumulative(edges[k]));
  return out;
}

std::vector<double> uniform_times(double dt, std::size_t steps) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "time step must be positive");
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = dt * static_cast<double>(k);
  return t;
}

}  // namespace levyruin
