#pragma once

#include "fracdiff/exponents.hpp"
#include "fracdiff/fracop.hpp"
#include "fracdiff/geometry.hpp"
#include "fracdiff/semigroup.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fracdiff {

/// One term a_k(x, t) |z|^{b_k} z. The coefficient is stored on interior nodes
/// (rows follow SpaceGrid::indices(Region::interior), columns the time steps).
struct PowerTerm {
  double exponent = 1.0;
  Eigen::MatrixXd coefficient;
};

/// a(x, t, z) = sum_k a_k(x, t) |z|^{b_k} z with 0 < b_1 < ... < b_m and a_k >= 0.
class Nonlinearity {
 public:
  Nonlinearity() = default;

  /// Throws InvalidArgument if b is not larger than the previous exponent or
  /// the coefficient is negative or not finite.
  void add_term(double exponent, Eigen::MatrixXd coefficient);

  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const std::vector<PowerTerm>& terms() const { return terms_; }
  std::vector<double> exponents() const;

  /// Pointwise sum_k a_k |u|^{b_k} u for an interior block u.
  Eigen::MatrixXd eval(const Eigen::MatrixXd& u) const;

 private:
  std::vector<PowerTerm> terms_;
};

/// Interior-supported field a(x, t, u(x, t)).
SpaceTimeField eval_nonlinearity(const SpaceGrid& grid, const TimeGrid& time, const Nonlinearity& nl,
                                 const SpaceTimeField& u);

/// |z|^b z with the z = 0 branch returning 0 exactly.
double signed_power(double z, double b);

struct SolveReport {
  SpaceTimeField u;
  std::string method;
  Index iterations = 0;
  double residual = 0.0;             // relative sup-norm change of the last iterate
  std::vector<double> ratios;        // X-norm contraction ratios, from the second iterate on
  double ball_radius = 0.0;          // ||data||^{1/2}, reported only
  double solution_x_norm = 0.0;      // ||w||_X of the interior part
  AdmissibleTriple exponents;
};

struct PicardOptions {
  double tol = 1e-12;
  Index max_iter = 200;
  /// Consecutive ratios >= 1 that count as non-contraction.
  Index stall_window = 3;
};

/// Discrete forward problem on a fixed operator, semigroup and time grid.
class ForwardSolver {
 public:
  ForwardSolver(const FracOperator& op, const RestrictedSemigroup& sg, const TimeGrid& time);

  const FracOperator& op() const { return op_; }
  const RestrictedSemigroup& semigroup() const { return sg_; }
  const TimeGrid& time() const { return time_; }
  const SpaceGrid& grid() const { return op_.grid(); }

  /// -A_IE g on interior nodes, the source that carries the exterior data.
  Eigen::MatrixXd exterior_source(const SpaceTimeField& g) const;

  /// u^{j+1} = G(f - a(u^j)) on interior nodes, from `start` (zero when null).
  /// Throws NonContractionError after `stall_window` consecutive ratios >= 1
  /// and SolverError when max_iter is exceeded.
  SolveReport picard_source(const Nonlinearity& nl, const Eigen::MatrixXd& source, const PicardOptions& opt,
                            const Eigen::MatrixXd* start = nullptr) const;

  /// Solves u_t + A u + a(u) = f in the domain with u = g outside, u(0) = 0,
  /// through u = w + g. `f` may be null. Throws InvalidArgument when g is not
  /// exterior-supported or g(., 0) != 0.
  SolveReport solve(const Nonlinearity& nl, const SpaceTimeField& g, const PicardOptions& opt,
                    const SpaceTimeField* f = nullptr, const Eigen::MatrixXd* start = nullptr) const;

  /// Linear problem (a = 0) with exterior data g.
  SpaceTimeField solve_linear(const SpaceTimeField& g) const;

  /// max over interior nodes and steps of the trapezoid-averaged residual of
  /// u_t + A u + a(u) - f, divided by max(||A_IE g||_inf, ||f||_inf).
  double pde_residual(const Nonlinearity& nl, const SpaceTimeField& u, const SpaceTimeField* f = nullptr) const;

 private:
  void check_exterior_data(const SpaceTimeField& g) const;

  const FracOperator& op_;
  const RestrictedSemigroup& sg_;
  TimeGrid time_;
  Eigen::MatrixXd a_ie_;
  std::vector<Index> ext_;
};

/// Backward Euler in the operator, explicit in the nonlinearity:
/// (I + dt A_II) u^{j+1} = u^j + dt (f^{j+1} - a(u^j)) - dt A_IE g^{j+1}.
/// Data must live on `time`; the result carries g on the exterior.
SpaceTimeField imex_oracle(const FracOperator& op, const TimeGrid& time, const Nonlinearity& nl,
                           const SpaceTimeField& g, const SpaceTimeField* f = nullptr);

struct LinfReport {
  bool holds = true;
  double value = 0.0;  // ||u||_inf over all nodes and steps
  double bound = 0.0;  // T ||f||_inf + ||g||_inf + slack
  Index worst_node = -1;
  Index worst_step = -1;
};

/// ||u||_inf <= T ||f||_{inf, Omega x (0,T)} + ||g||_{inf, exterior} + slack. `f` may be null.
LinfReport check_linf_bound(const SpaceGrid& grid, const TimeGrid& time, const SpaceTimeField& u,
                            const SpaceTimeField* f, const SpaceTimeField& g, double slack = 1e-8);

struct UniquenessReport {
  double max_distance = 0.0;  // relative L^2 distance between the three Picard runs
  double imex_distance = 0.0;  // relative L^2 distance of the bare IMEX solution (O(dt))
  std::vector<double> pairwise;
};

/// Picard from 0, from the linear lift, and from the IMEX solution.
UniquenessReport check_uniqueness(const ForwardSolver& solver, const Nonlinearity& nl, const SpaceTimeField& g,
                                  const PicardOptions& opt);

}  // namespace fracdiff
