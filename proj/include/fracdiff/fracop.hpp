#pragma once

#include "fracdiff/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace fracdiff {

/// c_{n,s} = 4^s Gamma(n/2 + s) / (pi^{n/2} |Gamma(-s)|), the constant that gives
/// the singular-integral operator the Fourier symbol |xi|^{2s}.
double fractional_constant(int dim, double s);

/// Unit-spacing quadrature weights of the singular integral
///
///   c_{n,s} p.v. \int (f(x) - f(y)) / |x - y|^{n+2s} dy.
///
/// The far field (outside the cell [-h, h]^n around x) integrates the kernel
/// exactly against the piecewise (multi)linear interpolant of f. The near cell
/// uses a second-order Taylor expansion, and the interpolation error of
/// quadratics in the far field is folded back in through the same discrete
/// Laplacian. Both corrections only touch the nearest neighbours, so the
/// weights stay symmetric, positive and summable. The physical weight of
/// lattice offset k at spacing h is c_{n,s} h^{-2s} weight(k).
class FractionalStencil {
 public:
  FractionalStencil(int dim, double s);

  int dim() const { return dim_; }
  double order() const { return s_; }

  /// Weight of lattice offset (k1, k2) != 0.
  double weight(Index k1, Index k2 = 0) const;
  /// Sum of weight(k) over all nonzero offsets of the infinite lattice.
  double total() const { return total_; }
  /// 1-D only: sum of weight(k) over k >= first (first >= 1).
  double tail_sum(Index first) const;
  /// Coefficient added to each nearest neighbour by the near-cell corrections.
  double near_coefficient() const { return near_; }

  /// Make sure weight() is tabulated up to |k|_inf <= reach.
  void reserve(Index reach) const;

 private:
  double far_weight_1d(Index k) const;
  double far_weight_2d(Index k1, Index k2) const;

  int dim_;
  double s_;
  double near_ = 0.0;
  double total_ = 0.0;
  mutable Index reach_ = 0;
  mutable std::vector<double> table_;  // 1-D: [k]; 2-D: [k1 * (reach + 1) + k2], k1, k2 >= 0
};

enum class TailMode {
  analytic,  ///< zero extension beyond the box integrated into the diagonal
  none       ///< box treated as the whole space; rows sum to zero
};

/// Dense discretization of (-Delta)^s on all nodes of a SpaceGrid.
class FracOperator {
 public:
  FracOperator(SpaceGrid grid, double s, double constant, TailMode mode, Eigen::MatrixXd matrix,
               Eigen::VectorXd tail);

  double order() const { return s_; }
  double constant() const { return constant_; }
  TailMode tail_mode() const { return mode_; }
  const SpaceGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// Diagonal contribution of the region beyond the box (zero for TailMode::none).
  const Eigen::VectorXd& tail() const { return tail_; }

  Eigen::MatrixXd block(Region rows, Region cols) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return matrix_ * f; }

 private:
  SpaceGrid grid_;
  double s_;
  double constant_;
  TailMode mode_;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd tail_;
};

/// Throws InvalidArgument unless 0 < s < 1.
FracOperator assemble_frac_laplacian(const SpaceGrid& grid, double s, TailMode mode = TailMode::analytic);

/// Fourier symbol of the stencil on the infinite lattice of spacing h, i.e. the
/// eigenvalue of the discrete operator on the mode exp(i xi . x). Compare
/// against |xi|^{2s}.
double lattice_symbol(const FractionalStencil& stencil, double h, const std::array<double, 2>& xi);

/// Discrete bilinear form
///   (c_{n,s}/2) sum_{i != j} w_ij (u_i - u_j)(v_i - v_j) h^n + sum_i tail_i u_i v_i h^n
/// where w_ij are the quadrature weights of the operator.
double apply_bilinear(const FracOperator& op, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Nonlocal Neumann operator: for exterior nodes x,
///   N_s u(x, t) = sum_{y in Omega} w_xy (u(x, t) - u(y, t)).
SpaceTimeField neumann_operator(const FracOperator& op, const TimeGrid& time, const SpaceTimeField& u);

}  // namespace fracdiff
