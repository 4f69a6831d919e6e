#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "levyruin/domain.hpp"
#include "levyruin/kernel.hpp"

namespace levyruin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Uniform grid on one interval of the domain: nodes a + k h for k = 0..cells,
// with the two end nodes carrying the zero boundary value.
struct GridPiece {
  double lo;
  double hi;
  double h;
  std::size_t cells;
  std::size_t first_unknown;
  std::size_t first_midpoint;
};

// Staggered grid over a domain. Unknowns are the interior nodes of every
// piece; midpoints sit between consecutive nodes, boundary nodes included.
class Grid {
 public:
  explicit Grid(std::vector<GridPiece> pieces);

  const std::vector<GridPiece>& pieces() const { return pieces_; }
  std::size_t node_count() const;
  std::size_t unknown_count() const { return unknown_piece_.size(); }
  std::size_t midpoint_count() const { return midpoint_piece_.size(); }

  double unknown_position(std::size_t i) const;
  double midpoint_position(std::size_t j) const;
  std::size_t unknown_piece(std::size_t i) const { return unknown_piece_[i]; }
  std::size_t midpoint_piece(std::size_t j) const { return midpoint_piece_[j]; }
  // Midpoints immediately left and right of an unknown.
  std::size_t left_midpoint(std::size_t i) const;
  std::size_t right_midpoint(std::size_t i) const { return left_midpoint(i) + 1; }
  double step(std::size_t i) const { return pieces_[unknown_piece_[i]].h; }

  std::vector<double> unknown_positions() const;
  std::vector<double> midpoint_positions() const;
  // All nodes in order, with a flag marking boundary nodes.
  std::vector<double> node_positions() const;
  std::vector<bool> boundary_flags() const;
  // Unknown-indexed values spread onto all nodes, zero at boundary nodes.
  std::vector<double> to_nodes(const Vector& values) const;

  // Unknown nearest to x; empty when x is outside the domain or nearest to a boundary node.
  std::optional<std::size_t> nearest_unknown(double x) const;

 private:
  std::vector<GridPiece> pieces_;
  std::vector<std::size_t> unknown_piece_;
  std::vector<std::size_t> midpoint_piece_;
};

Grid build_grid(const Domain& domain, double resolution);

// S at midpoints: S[i][j] = (A/2) delta_ij + integral of K_tot(y - m_i) over midpoint cell j.
Matrix assemble_S(const Grid& grid, const KernelTable& table, double A);
// Same, tabulating the kernel itself; pieces with mismatched steps fall back
// to direct primitive differences.
Matrix assemble_S(const Grid& grid, const UnifiedKernel& kernel);

// L = D_out S D_in with D_in forward differences of node values (zero at the
// boundary) and D_out = -D_in^T.
Matrix assemble_generator(const Grid& grid, const Matrix& S);

struct QuasiPotential {
  Matrix B;
  Matrix phi_rows;
  double residual = 0.0;
  double reciprocal_condition = 0.0;
  // Smallest entry of B divided by its largest entry.
  double min_entry_ratio = 0.0;
  bool refined = false;
};

// B = (-L)^{-1} by partial-pivot LU with one refinement step when needed.
QuasiPotential quasipotential(const Matrix& L);

struct OperatorSet {
  Grid grid;
  Matrix S_mid;
  Matrix L;
  Matrix B;
  Matrix phi_rows;
  double residual = 0.0;
  double reciprocal_condition = 0.0;
  double min_entry_ratio = 0.0;
};

OperatorSet build_operators(const LevyTriplet& triplet, const Domain& domain, double resolution,
                            double anchor = 1.0);

}  // namespace levyruin
