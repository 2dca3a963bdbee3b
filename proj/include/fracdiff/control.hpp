#pragma once

#include "fracdiff/forward.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fracdiff {

struct RungeControl {
  SpaceTimeField g;        // supported in the control window, g(., 0) = 0
  SpaceTimeField u;        // linear solution u_g on all nodes
  double delta = 0.0;      // ||target - u_g||_{L^2(Omega x (0,T))}, from a fresh forward solve
  double reg_weight = 0.0;
  double condition_estimate = 0.0;  // (max L_ii / min L_ii)^2 of the Cholesky factor
};

/// The linear control-to-state map B: g |-> u_g restricted to Omega x [0, T],
/// for g on control-window nodes x time steps 1..N_t (a time hat per step).
/// Minimizes ||B g - target||^2 + reg ||g||^2 in the discrete L^2 norms
/// (space h^n, trapezoid in time for the state; h^n dt for the control).
class RungeSynthesizer {
 public:
  /// Assembles B column by column through the Duhamel operator.
  explicit RungeSynthesizer(const ForwardSolver& solver);

  const Eigen::MatrixXd& matrix() const { return b_; }
  Index controls() const { return b_.cols(); }

  /// `target` is count(interior) x time.size(). Throws SolverError when the
  /// regularized normal matrix is not positive definite or its condition
  /// estimate exceeds `max_condition`.
  RungeControl synthesize(const Eigen::MatrixXd& target, double reg_weight, double max_condition = 1e15) const;

  /// Window field for a coefficient vector ordered (step - 1) * count(control) + node.
  SpaceTimeField field(const Eigen::VectorXd& coefficients) const;

 private:
  const ForwardSolver& solver_;
  Eigen::MatrixXd b_;
  Eigen::VectorXd row_weight_;  // h^n w_j per state entry
  Eigen::MatrixXd normal_;      // B^T W B
};

/// One-shot wrapper around RungeSynthesizer.
RungeControl synthesize_control(const ForwardSolver& solver, const Eigen::MatrixXd& target, double reg_weight);

}  // namespace fracdiff
