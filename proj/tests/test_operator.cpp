#include <cmath>

#include <doctest.h>

#include "levyruin/error.hpp"
#include "levyruin/operator.hpp"

using namespace levyruin;

namespace {

LevyTriplet find_builtin(const std::string& name) {
  for (auto& t : builtin_triplets()) {
    if (t.name == name) return t.triplet;
  }
  throw std::runtime_error("no builtin " + name);
}

Vector bump_on(const Grid& grid, double centre, double width) {
  Vector f(static_cast<Eigen::Index>(grid.unknown_count()));
  for (std::size_t i = 0; i < grid.unknown_count(); ++i) {
    const double x = (grid.unknown_position(i) - centre) / width;
    f(static_cast<Eigen::Index>(i)) = std::exp(-x * x);
  }
  return f;
}

// sup |L f - (-f' + f(x+1) - f(x))| over the unknowns for a Gaussian bump.
double poisson_identity_error(double resolution) {
  const LevyTriplet t(0.0, -1.0, PoissonFamily{1.0, 1.0});
  const OperatorSet ops = build_operators(t, Domain({{-2.0, 2.0}}), resolution);
  const double w = 0.2;
  auto f = [&](double x) { return std::exp(-(x / w) * (x / w)); };
  auto df = [&](double x) { return -2.0 * x / (w * w) * f(x); };
  const Vector Lf = ops.L * bump_on(ops.grid, 0.0, w);
  double err = 0.0;
  for (std::size_t i = 0; i < ops.grid.unknown_count(); ++i) {
    const double x = ops.grid.unknown_position(i);
    const double exact = -df(x) + (x + 1.0 < 2.0 ? f(x + 1.0) : 0.0) - f(x);
    err = std::max(err, std::abs(Lf(static_cast<Eigen::Index>(i)) - exact));
  }
  return err;
}

}  // namespace

TEST_CASE("grid layout and node lookup") {
  const Grid g = build_grid(Domain({{-1.0, 1.0}}), 200.0);
  CHECK(g.unknown_count() == 399);
  CHECK(g.midpoint_count() == 400);
  CHECK(g.node_count() == 401);
  REQUIRE(g.nearest_unknown(0.0));
  CHECK(g.unknown_position(*g.nearest_unknown(0.0)) == doctest::Approx(0.0));
  CHECK_FALSE(g.nearest_unknown(-1.0));
  CHECK_FALSE(g.nearest_unknown(3.0));
  CHECK(g.midpoint_position(0) == doctest::Approx(-1.0 + 0.0025));

  const Grid two = build_grid(Domain({{-1.0, -0.5}, {0.5, 1.0}}), 100.0);
  CHECK(two.unknown_count() == 98);
  CHECK(two.midpoint_count() == 100);
  CHECK_THROWS_AS(build_grid(Domain({{0.0, 0.02}}), 100.0), Error);
}

TEST_CASE("Brownian generator is half the second difference") {
  const OperatorSet ops = build_operators(LevyTriplet(1.0, 0.0, BrownianFamily{}), Domain({{-1.0, 1.0}}), 50.0);
  const double h = 0.02;
  const Eigen::Index n = ops.L.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double expected = i == j ? -1.0 / (h * h) : (std::abs(i - j) == 1 ? 0.5 / (h * h) : 0.0);
      CHECK(ops.L(i, j) == doctest::Approx(expected).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("Brownian quasi-potential is the Green's function on two disjoint intervals") {
  const Domain d({{-1.0, -0.5}, {0.5, 1.0}});
  const OperatorSet ops = build_operators(LevyTriplet(1.0, 0.0, BrownianFamily{}), d, 100.0);
  const double h = 0.01;
  double worst = 0.0;
  for (std::size_t i = 0; i < ops.grid.unknown_count(); ++i) {
    for (std::size_t j = 0; j < ops.grid.unknown_count(); ++j) {
      const double x = ops.grid.unknown_position(i), y = ops.grid.unknown_position(j);
      double g = 0.0;
      if (ops.grid.unknown_piece(i) == ops.grid.unknown_piece(j)) {
        const double a = x < 0.0 ? -1.0 : 0.5, b = a + 0.5;
        g = 2.0 * (std::min(x, y) - a) * (b - std::max(x, y)) / (b - a);
      }
      worst = std::max(worst, std::abs(ops.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / h - g));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("Poisson generator identity converges at least at first order") {
  const double e1 = poisson_identity_error(25.0);
  const double e2 = poisson_identity_error(50.0);
  const double e3 = poisson_identity_error(100.0);
  // Halving h must at least halve the error, up to a small constant slack.
  CHECK(e2 <= 0.55 * e1);
  CHECK(e3 <= 0.55 * e2);
}

TEST_CASE("generator action does not depend on the kernel anchor") {
  const LevyTriplet t = find_builtin("stable_1.5_skewed");
  const Domain d({{-1.0, 1.0}});
  const Grid grid = build_grid(d, 100.0);
  const Vector f = bump_on(grid, 0.1, 0.15);
  const Vector a = assemble_generator(grid, assemble_S(grid, make_kernel(t, 1.0))) * f;
  const Vector b = assemble_generator(grid, assemble_S(grid, make_kernel(t, 0.4))) * f;
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("quasi-potentials are nonnegative, and symmetric for symmetric triplets") {
  for (const std::string name : {"cauchy", "stable_1.5_skewed", "cgmy_0.5", "jump_diffusion_exp"}) {
    CAPTURE(name);
    const LevyTriplet t = find_builtin(name);
    const OperatorSet ops = build_operators(t, Domain({{-1.0, 1.0}}), 100.0);
    CHECK(ops.residual <= 1e-10);
    CHECK(ops.min_entry_ratio >= 0.0);
    if (is_symmetric(t)) {
      CHECK((ops.B - ops.B.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * ops.B.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("assembled S entries are cell integrals of the kernel") {
  const LevyTriplet t = find_builtin("cgmy_1.5");
  const UnifiedKernel k = make_kernel(t, 1.0);
  const Grid grid = build_grid(Domain({{-1.0, 1.0}}), 50.0);
  const Matrix S = assemble_S(grid, k);
  const auto nodes = grid.node_positions();
  for (std::size_t i = 0; i < grid.midpoint_count(); i += 7) {
    const double m = grid.midpoint_position(i);
    for (std::size_t j = 0; j < grid.midpoint_count(); j += 5) {
      const double direct = k.primitive(nodes[j + 1] - m) - k.primitive(nodes[j] - m) + (i == j ? 0.5 * t.A() : 0.0);
      CHECK(S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
            doctest::Approx(direct).epsilon(1e-8).scale(1e-3));
    }
  }
  // Pieces off the common lattice fall back to primitive differences.
  const Grid odd = build_grid(Domain({{-1.0, 0.0}, {0.013, 1.013}}), 50.0);
  CHECK_THROWS_AS(assemble_S(odd, tabulate_kernel(k, 0.02, 2.1), t.A()), Error);
  const Matrix S3 = assemble_S(odd, k);
  CHECK(S3.rows() == 100);
  CHECK(S3.allFinite());
}
