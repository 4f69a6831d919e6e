#include "levyruin/operator.hpp"

#include <algorithm>
#include <cmath>

#include "levyruin/error.hpp"
#include "levyruin/parallel.hpp"

namespace levyruin {

Grid::Grid(std::vector<GridPiece> pieces) : pieces_(std::move(pieces)) {
  for (std::size_t p = 0; p < pieces_.size(); ++p) {
    for (std::size_t k = 1; k < pieces_[p].cells; ++k) unknown_piece_.push_back(p);
    for (std::size_t k = 0; k < pieces_[p].cells; ++k) midpoint_piece_.push_back(p);
  }
}

std::size_t Grid::node_count() const {
  std::size_t n = 0;
  for (const auto& p : pieces_) n += p.cells + 1;
  return n;
}

double Grid::unknown_position(std::size_t i) const {
  const auto& p = pieces_[unknown_piece_[i]];
  const double k = static_cast<double>(i - p.first_unknown + 1);
  return p.lo + (p.hi - p.lo) * k / static_cast<double>(p.cells);
}

double Grid::midpoint_position(std::size_t j) const {
  const auto& p = pieces_[midpoint_piece_[j]];
  const double k = static_cast<double>(j - p.first_midpoint) + 0.5;
  return p.lo + (p.hi - p.lo) * k / static_cast<double>(p.cells);
}

std::size_t Grid::left_midpoint(std::size_t i) const {
  const auto& p = pieces_[unknown_piece_[i]];
  return p.first_midpoint + (i - p.first_unknown);
}

std::vector<double> Grid::unknown_positions() const {
  std::vector<double> x(unknown_count());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = unknown_position(i);
  return x;
}

std::vector<double> Grid::midpoint_positions() const {
  std::vector<double> x(midpoint_count());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = midpoint_position(j);
  return x;
}

std::vector<double> Grid::node_positions() const {
  std::vector<double> x;
  x.reserve(node_count());
  for (const auto& p : pieces_) {
    for (std::size_t k = 0; k <= p.cells; ++k) {
      x.push_back(p.lo + (p.hi - p.lo) * static_cast<double>(k) / static_cast<double>(p.cells));
    }
  }
  return x;
}

std::vector<bool> Grid::boundary_flags() const {
  std::vector<bool> flags;
  flags.reserve(node_count());
  for (const auto& p : pieces_) {
    for (std::size_t k = 0; k <= p.cells; ++k) flags.push_back(k == 0 || k == p.cells);
  }
  return flags;
}

std::vector<double> Grid::to_nodes(const Vector& values) const {
  if (static_cast<std::size_t>(values.size()) != unknown_count()) {
    throw Error(ErrorKind::InvalidArgument, "vector length does not match the grid unknowns");
  }
  std::vector<double> out;
  out.reserve(node_count());
  for (const auto& p : pieces_) {
    out.push_back(0.0);
    for (std::size_t k = 1; k < p.cells; ++k) out.push_back(values[static_cast<Eigen::Index>(p.first_unknown + k - 1)]);
    out.push_back(0.0);
  }
  return out;
}

std::optional<std::size_t> Grid::nearest_unknown(double x) const {
  for (const auto& p : pieces_) {
    if (x < p.lo || x > p.hi) continue;
    const auto k = static_cast<std::size_t>(std::llround((x - p.lo) / p.h));
    if (k == 0 || k >= p.cells) return std::nullopt;
    return p.first_unknown + k - 1;
  }
  return std::nullopt;
}

Grid build_grid(const Domain& domain, double resolution) {
  if (!(resolution >= 16.0)) throw Error(ErrorKind::InvalidArgument, "grid resolution must be at least 16");
  std::vector<GridPiece> pieces;
  std::size_t unknowns = 0, midpoints = 0;
  for (const auto& iv : domain.intervals()) {
    const double length = iv.hi - iv.lo;
    const auto cells = static_cast<std::size_t>(std::llround(length * resolution));
    if (cells < 5) {
      throw Error(ErrorKind::InvalidArgument, "resolution leaves an interval with fewer than 4 interior nodes");
    }
    pieces.push_back({iv.lo, iv.hi, length / static_cast<double>(cells), cells, unknowns, midpoints});
    unknowns += cells - 1;
    midpoints += cells;
  }
  return Grid(std::move(pieces));
}

namespace {

// Lattice shift between two pieces in units of h, if their nodes align.
std::optional<long> lattice_shift(const GridPiece& from, const GridPiece& to, double h) {
  const double shift = (to.lo - from.lo) / h;
  const double rounded = std::round(shift);
  if (std::abs(shift - rounded) > 1e-9 * std::max(1.0, std::abs(shift))) return std::nullopt;
  return static_cast<long>(rounded);
}

bool single_lattice(const Grid& grid) {
  const auto& pieces = grid.pieces();
  const double h = pieces.front().h;
  for (const auto& p : pieces) {
    if (std::abs(p.h - h) > 1e-12 * h || !lattice_shift(pieces.front(), p, h)) return false;
  }
  return true;
}

}  // namespace

Matrix assemble_S(const Grid& grid, const KernelTable& table, double A) {
  const auto& pieces = grid.pieces();
  const std::size_t m = grid.midpoint_count();
  for (const auto& p : pieces) {
    if (std::abs(p.h - table.h) > 1e-12 * table.h) {
      throw Error(ErrorKind::Coverage, "kernel table step does not match the grid step");
    }
  }
  std::vector<long> shift(pieces.size());
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const auto s = lattice_shift(pieces.front(), pieces[p], table.h);
    if (!s) throw Error(ErrorKind::Coverage, "grid pieces are not aligned with the kernel table lattice");
    shift[p] = *s;
  }
  Matrix S(m, m);
  parallel_for(m, [&](std::size_t i) {
    const std::size_t pi = grid.midpoint_piece(i);
    const long ci = shift[pi] + static_cast<long>(i - pieces[pi].first_midpoint);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t pj = grid.midpoint_piece(j);
      const long cj = shift[pj] + static_cast<long>(j - pieces[pj].first_midpoint);
      const long d = cj - ci;
      if (!table.covers(d)) throw Error(ErrorKind::Coverage, "kernel table does not cover a midpoint offset");
      S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.h * table.average(d);
    }
    S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += 0.5 * A;
  });
  return S;
}

Matrix assemble_S(const Grid& grid, const UnifiedKernel& kernel) {
  const auto& pieces = grid.pieces();
  if (single_lattice(grid)) {
    const double h = pieces.front().h;
    const double span = pieces.back().hi - pieces.front().lo;
    return assemble_S(grid, tabulate_kernel(kernel, h, span), kernel.A());
  }
  const std::size_t m = grid.midpoint_count();
  const auto nodes = grid.node_positions();
  Matrix S(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const double mi = grid.midpoint_position(i);
    std::vector<double> u(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) u[k] = nodes[k] - mi;
    const auto P = kernel.primitive_many(u);
    std::size_t node = 0;
    for (const auto& p : pieces) {
      for (std::size_t c = 0; c < p.cells; ++c) {
        const std::size_t j = p.first_midpoint + c;
        S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = P[node + c + 1] - P[node + c];
      }
      node += p.cells + 1;
    }
    S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += 0.5 * kernel.A();
  }
  return S;
}

Matrix assemble_generator(const Grid& grid, const Matrix& S) {
  const std::size_t n = grid.unknown_count();
  if (static_cast<std::size_t>(S.rows()) != grid.midpoint_count() || S.rows() != S.cols()) {
    throw Error(ErrorKind::InvalidArgument, "S does not match the grid midpoints");
  }
  Matrix L(n, n);
  parallel_for(n, [&](std::size_t v) {
    const auto lv = static_cast<Eigen::Index>(grid.left_midpoint(v));
    const auto rv = lv + 1;
    const double hv = grid.step(v);
    for (std::size_t u = 0; u < n; ++u) {
      const auto lu = static_cast<Eigen::Index>(grid.left_midpoint(u));
      const auto ru = lu + 1;
      // Grouped so that a symmetric S yields a bitwise symmetric L.
      const double cross = S(rv, lu) + S(lv, ru);
      const double same = S(rv, ru) + S(lv, lu);
      L(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = (cross - same) / (hv * grid.step(u));
    }
  });
  return L;
}

QuasiPotential quasipotential(const Matrix& L) {
  const Matrix negL = -L;
  const Eigen::PartialPivLU<Matrix> lu(negL);
  QuasiPotential q;
  q.reciprocal_condition = lu.rcond();
  if (!(q.reciprocal_condition > 1e-14)) {
    throw Error(ErrorKind::Singular, "generator not invertible on grid (condition estimate above 1e14)");
  }
  const Matrix identity = Matrix::Identity(L.rows(), L.cols());
  q.B = lu.solve(identity);
  Matrix residual = negL * q.B - identity;
  q.residual = residual.cwiseAbs().maxCoeff();
  if (q.residual > 1e-10) {
    q.B -= lu.solve(residual);
    residual = negL * q.B - identity;
    q.residual = residual.cwiseAbs().maxCoeff();
    q.refined = true;
  }
  if (!q.B.allFinite()) throw Error(ErrorKind::Numerical, "quasi-potential has non-finite entries");
  q.phi_rows = q.B;
  for (Eigen::Index i = 0; i < q.B.rows(); ++i) {
    for (Eigen::Index j = 1; j < q.B.cols(); ++j) q.phi_rows(i, j) += q.phi_rows(i, j - 1);
  }
  q.min_entry_ratio = q.B.minCoeff() / q.B.maxCoeff();
  return q;
}

OperatorSet build_operators(const LevyTriplet& triplet, const Domain& domain, double resolution, double anchor) {
  Grid grid = build_grid(domain, resolution);
  Matrix S = assemble_S(grid, make_kernel(triplet, anchor));
  Matrix L = assemble_generator(grid, S);
  QuasiPotential q = quasipotential(L);
  return OperatorSet{std::move(grid),   std::move(S),  std::move(L),         std::move(q.B),
                     std::move(q.phi_rows), q.residual, q.reciprocal_condition, q.min_entry_ratio};
}

}  // namespace levyruin
