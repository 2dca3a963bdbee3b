#include "fracdiff/control.hpp"

#include "fracdiff/errors.hpp"

#include <cmath>
#include <sstream>

namespace fracdiff {

RungeSynthesizer::RungeSynthesizer(const ForwardSolver& solver) : solver_(solver) {
  const SpaceGrid& grid = solver.grid();
  const TimeGrid& time = solver.time();
  const Index K = grid.count(Region::interior);
  const Index nt = time.size();
  const auto& window = grid.indices(Region::control);
  const Index nc = static_cast<Index>(window.size());
  const Eigen::MatrixXd a_ic = solver.op().block(Region::interior, Region::control);

  // column (m - 1) * nc + c is the response to the window node c pulsed at step m
  b_.resize(K * nt, nc * (nt - 1));
  Eigen::MatrixXd pulse = Eigen::MatrixXd::Zero(K, nt);
  for (Index m = 1; m < nt; ++m) {
    for (Index c = 0; c < nc; ++c) {
      pulse.col(m) = -a_ic.col(c);
      const Eigen::MatrixXd response = solver.semigroup().duhamel(time, pulse);
      b_.col((m - 1) * nc + c) = Eigen::Map<const Eigen::VectorXd>(response.data(), response.size());
    }
    pulse.col(m).setZero();
  }
  row_weight_.resize(K * nt);
  for (Index j = 0; j < nt; ++j) row_weight_.segment(j * K, K).setConstant(grid.cell_volume() * time.weights()(j));
  normal_ = b_.transpose() * row_weight_.asDiagonal() * b_;
}

SpaceTimeField RungeSynthesizer::field(const Eigen::VectorXd& coefficients) const {
  const SpaceGrid& grid = solver_.grid();
  const TimeGrid& time = solver_.time();
  const auto& window = grid.indices(Region::control);
  const Index nc = static_cast<Index>(window.size());
  if (coefficients.size() != b_.cols()) throw InvalidArgument("control coefficient vector has the wrong size");
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nc, time.size());
  for (Index m = 1; m < time.size(); ++m) block.col(m) = coefficients.segment((m - 1) * nc, nc);
  return SpaceTimeField::from_block(grid, time, Region::control, block);
}

RungeControl RungeSynthesizer::synthesize(const Eigen::MatrixXd& target, double reg_weight,
                                          double max_condition) const {
  const SpaceGrid& grid = solver_.grid();
  const TimeGrid& time = solver_.time();
  const Index K = grid.count(Region::interior);
  if (target.rows() != K || target.cols() != time.size()) throw InvalidArgument("control target has the wrong shape");
  if (!(reg_weight >= 0.0)) throw InvalidArgument("regularization weight must be nonnegative");

  const Eigen::Map<const Eigen::VectorXd> y(target.data(), target.size());
  const Eigen::VectorXd rhs = b_.transpose() * row_weight_.cwiseProduct(y);
  Eigen::MatrixXd m = normal_;
  m.diagonal().array() += reg_weight * grid.cell_volume() * time.dt();
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw SolverError("control normal matrix is not positive definite");
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  RungeControl out;
  out.reg_weight = reg_weight;
  out.condition_estimate = std::pow(diag.maxCoeff() / diag.minCoeff(), 2);
  if (out.condition_estimate > max_condition) {
    std::ostringstream os;
    os << "control normal equations are ill-conditioned (condition estimate " << out.condition_estimate << ")";
    throw SolverError(os.str());
  }
  out.g = field(llt.solve(rhs));
  out.u = solver_.solve_linear(out.g);
  out.delta = l2_spacetime_norm(grid, time, target - out.u.block(grid, Region::interior));
  return out;
}

RungeControl synthesize_control(const ForwardSolver& solver, const Eigen::MatrixXd& target, double reg_weight) {
  return RungeSynthesizer(solver).synthesize(target, reg_weight);
}

}  // namespace fracdiff
