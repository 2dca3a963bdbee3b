#pragma once

#include "fracdiff/fracop.hpp"
#include "fracdiff/geometry.hpp"
#include "fracdiff/heat_kernel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fracdiff {

/// S_Omega(t) = exp(-t A_II) through the eigendecomposition of the interior
/// block. Vectors are indexed by SpaceGrid::indices(Region::interior).
class RestrictedSemigroup {
 public:
  /// Throws SolverError if A_II is not positive definite.
  explicit RestrictedSemigroup(const FracOperator& op);

  const SpaceGrid& grid() const { return grid_; }
  double order() const { return s_; }
  Index size() const { return mu_.size(); }
  /// Ascending eigenvalues of A_II.
  const Eigen::VectorXd& eigenvalues() const { return mu_; }
  const Eigen::MatrixXd& eigenvectors() const { return v_; }
  /// max_k ||A_II v_k - mu_k v_k||_2.
  double eigen_residual() const { return residual_; }

  /// sum_k e^{-mu_k t} <f, v_k> v_k. Throws InvalidArgument for t < 0.
  Eigen::VectorXd apply(double t, const Eigen::VectorXd& f) const;

  /// (Gf)(t_j) = int_0^{t_j} S_Omega(t_j - tau) f(tau) dtau, f piecewise linear
  /// in time between the grid values. The exponential is integrated exactly
  /// against the linear interpolant mode by mode, so the trapezoid rule with
  /// S_Omega(0) = Id at the endpoint is recovered as mu dt -> 0.
  /// `f` is count(interior) x time.size(); column 0 of the result is zero.
  Eigen::MatrixXd duhamel(const TimeGrid& time, const Eigen::MatrixXd& f) const;
  SpaceTimeField duhamel(const TimeGrid& time, const SpaceTimeField& f) const;

 private:
  SpaceGrid grid_;
  double s_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd v_;
  double residual_ = 0.0;
};

/// S(t) f = K(., t) * f, sampled as a lattice convolution with weights K(x_i - x_j, t) h^n.
class FreeSemigroup {
 public:
  FreeSemigroup(const SpaceGrid& grid, double s);

  const SpaceGrid& grid() const { return grid_; }
  const HeatKernel& kernel() const { return kernel_; }

  /// `f` lives on all nodes of grid(). t = 0 returns f.
  Eigen::VectorXd apply(double t, const Eigen::VectorXd& f) const;
  /// Evaluates on the nodes of `target`, which must share the spacing and be
  /// node-aligned with grid() (typically a larger box).
  Eigen::VectorXd apply(double t, const Eigen::VectorXd& f, const SpaceGrid& target) const;

 private:
  SpaceGrid grid_;
  HeatKernel kernel_;
};

struct DecayRow {
  double t = 0.0;
  double norm = 0.0;   // ||S(t) f||_p
  double bound = 0.0;  // t^{-(n/2s)(1/r - 1/p)} ||f||_r
  double ratio = 0.0;  // norm / bound
};

struct DecayReport {
  double r = 0.0;
  double p = 0.0;
  double theory_exponent = 0.0;  // -(n/2s)(1/r - 1/p)
  double slope = 0.0;            // least-squares slope of log norm against log t
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  std::vector<DecayRow> rows;
};

/// Throws InvalidArgument for fewer than 3 times or r > p.
DecayReport check_decay_free(const FreeSemigroup& sg, const Eigen::VectorXd& f, double r, double p,
                             const std::vector<double>& times);
/// Same for S_Omega with `f` on interior nodes.
DecayReport check_decay_restricted(const RestrictedSemigroup& sg, const Eigen::VectorXd& f, double r, double p,
                                   const std::vector<double>& times);

struct ComparisonReport {
  bool holds = true;
  double slack = 0.0;
  double first_gap = 0.0;   // max over nodes of |S_Omega f| - S_Omega |f|
  double second_gap = 0.0;  // max over nodes of S_Omega |f| - S |f|
  Index first_node = -1;    // grid node of the worst first gap
  Index second_node = -1;
};

/// Pointwise |S_Omega(t) f| <= S_Omega(t)|f| <= S(t)|f| on interior nodes; `f` on interior nodes.
ComparisonReport check_comparison(const RestrictedSemigroup& restricted, const FreeSemigroup& free,
                                  const Eigen::VectorXd& f, double t, double slack = 1e-8);

}  // namespace fracdiff
