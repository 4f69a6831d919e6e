#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "levyruin/operator.hpp"

namespace levyruin {

struct LeadingEigenvalue {
  cplx value;
  // Number of Ritz values clustered at this value.
  int multiplicity = 1;
};

struct EigenResult {
  double lambda1 = 0.0;
  // Right and left eigenvectors on the unknowns. g1 has maximum 1 and
  // sum(g1 * h1_density) = 1; h1_density holds node masses, not values per unit length.
  Vector g1;
  Vector h1_density;
  int iterations = 0;
  // max |B g - lambda g| / (lambda max |g|), and the same for the transpose.
  double right_residual = 0.0;
  double left_residual = 0.0;
  // Cosine between g1 and h1; a simple eigenvalue has it bounded away from 0.
  double index_cosine = 0.0;
  bool index_one = false;
  // Smallest entries relative to the largest; negative values break positivity.
  double g1_min_ratio = 0.0;
  double h1_min_ratio = 0.0;
  std::vector<LeadingEigenvalue> leading;
};

// Power iteration on B (and on its transpose for the left vector) from the
// all-ones vector until successive Rayleigh quotients agree to rel_tol.
// Throws ErrorKind::Convergence ("dominance failure") after max_iterations.
EigenResult principal_eigenpair(const Matrix& B, double rel_tol = 1e-12, int max_iterations = 100000);

struct LeadingSpectrum {
  std::vector<LeadingEigenvalue> values;
  int iterations = 0;
  bool complete = true;
  std::vector<std::string> warnings;
  // min over values of lambda1/2 - |z - lambda1/2|; the disk holds when this
  // is >= -tol * lambda1 / 2.
  double disk_margin = 0.0;
  // max |arg z| over values.
  double sector_angle = 0.0;
  // max |z| / lambda1 over values.
  double modulus_ratio = 0.0;
};

// m dominant eigenvalues of B (m <= 20) by orthogonal iteration on a block of
// m + 5 vectors: each sweep applies B and re-orthonormalizes, which deflates
// the converged Schur vectors from the later columns. Eigenvalues are read
// off the projected block. Non-converged values are dropped with a warning.
LeadingSpectrum leading_spectrum(const Matrix& B, int m, double lambda1, std::uint64_t seed = 1,
                                 int max_iterations = 20000);
bool disk_contains(const LeadingSpectrum& s, double lambda1, double tol = 1e-6);

struct SectorialityReport {
  int trials = 0;
  double min_real = 0.0;
  double max_angle = 0.0;
  bool strongly_sectorial = false;
};

// Samples (S f, f) over seeded random complex unit vectors.
SectorialityReport sectoriality_check(const Matrix& S, int trials, std::uint64_t seed);

struct ExpmInfo {
  int squarings = 0;
  double refinement_change = 0.0;
};

// exp(A) by Pade(6,6) with scaling and squaring. The number of squarings grows
// until two successive choices agree to tol in max norm.
Matrix expm(const Matrix& A, double tol = 1e-9, ExpmInfo* info = nullptr);

struct RateFit {
  double rate = 0.0;
  double standard_error = 0.0;
  double intercept = 0.0;
  double intercept_standard_error = 0.0;
  std::size_t points = 0;
};

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> values;
  double x0 = 0.0;
  std::optional<RateFit> fit;
};

// Ordinary least squares of log p on t over the points with p in [lo, hi];
// stderr from the residual scatter. Needs 5 points.
RateFit fit_log_survival(const std::vector<double>& times, const std::vector<double>& values, double lo = 1e-4,
                         double hi = 1e-1);

// p(t, x0) = (exp(t L) 1)(x0) at the unknown nearest to x0.
SurvivalCurve survival_curve(const Grid& grid, const Matrix& L, double x0, const std::vector<double>& times);

// ((I + s B)^{-1} B 1)(x0); at s = 0 the row sum of B.
double laplace_survival(const Grid& grid, const Matrix& B, double x0, double s);

// Integral of e^{-st} p(t) over [0, inf) from the curve, which must start at
// t = 0: Simpson when the grid is uniform with an even number of steps,
// trapezoid otherwise, plus an exponential tail decaying at tail_rate.
double curve_laplace(const SurvivalCurve& curve, double s, double tail_rate);

struct Asymptotics {
  double rate = 0.0;
  double coefficient = 0.0;
};

// rate = 1/lambda1 and c1 = g1(x0) times the h1 mass over the subdomain
// (the whole domain by default). x0 on a boundary node gives c1 = 0.
Asymptotics asymptotics(const Grid& grid, const EigenResult& eig, double x0,
                        const std::optional<Domain>& subdomain = std::nullopt);

// Expected time spent in each [edges[k], edges[k+1]] before exit, from the
// row of B at x0: differences of the cumulative row interpolated linearly
// across the dual cells of the nodes.
std::vector<double> quasi_potential_bins(const Grid& grid, const Matrix& B, double x0, const std::vector<double>& edges);

// Uniform time grid 0, dt, ..., n dt.
std::vector<double> uniform_times(double dt, std::size_t steps);

}  // namespace levyruin
