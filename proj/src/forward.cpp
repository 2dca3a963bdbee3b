#include "fracdiff/forward.hpp"

#include "fracdiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracdiff {

namespace {

double rel_l2(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(l2_spacetime_norm(grid, time, a), l2_spacetime_norm(grid, time, b));
  if (scale == 0.0) return 0.0;
  return l2_spacetime_norm(grid, time, a - b) / scale;
}

Eigen::MatrixXd interior_block(const SpaceGrid& grid, const SpaceTimeField& f) {
  return f.block(grid, Region::interior);
}

}  // namespace

double signed_power(double z, double b) {
  if (z == 0.0) return 0.0;
  return std::exp(b * std::log(std::abs(z))) * z;
}

void Nonlinearity::add_term(double exponent, Eigen::MatrixXd coefficient) {
  if (!(exponent > 0.0)) throw InvalidArgument("nonlinearity exponents must be positive");
  if (!terms_.empty() && !(exponent > terms_.back().exponent)) {
    throw InvalidArgument("nonlinearity exponents must be strictly increasing");
  }
  if (!coefficient.allFinite()) throw InvalidArgument("nonlinearity coefficient is not finite");
  if (coefficient.size() > 0 && coefficient.minCoeff() < 0.0) {
    throw InvalidArgument("nonlinearity coefficient must be nonnegative");
  }
  terms_.push_back(PowerTerm{exponent, std::move(coefficient)});
}

std::vector<double> Nonlinearity::exponents() const {
  std::vector<double> b;
  for (const auto& t : terms_) b.push_back(t.exponent);
  return b;
}

Eigen::MatrixXd Nonlinearity::eval(const Eigen::MatrixXd& u) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  for (const auto& term : terms_) {
    if (term.coefficient.rows() != u.rows() || term.coefficient.cols() != u.cols()) {
      throw InvalidArgument("nonlinearity coefficient shape does not match the field");
    }
    const double b = term.exponent;
    out += term.coefficient.cwiseProduct(u.unaryExpr([b](double z) { return signed_power(z, b); }));
  }
  return out;
}

SpaceTimeField eval_nonlinearity(const SpaceGrid& grid, const TimeGrid& time, const Nonlinearity& nl,
                                 const SpaceTimeField& u) {
  return SpaceTimeField::from_block(grid, time, Region::interior, nl.eval(interior_block(grid, u)));
}

ForwardSolver::ForwardSolver(const FracOperator& op, const RestrictedSemigroup& sg, const TimeGrid& time)
    : op_(op), sg_(sg), time_(time), a_ie_(op.block(Region::interior, Region::exterior)),
      ext_(op.grid().indices(Region::exterior)) {}

void ForwardSolver::check_exterior_data(const SpaceTimeField& g) const {
  const SpaceGrid& grid = op_.grid();
  if (g.nodes() != grid.size() || g.times() != time_.size()) throw InvalidArgument("exterior data has the wrong shape");
  for (Index node : grid.indices(Region::interior)) {
    if (g.values().row(node).cwiseAbs().maxCoeff() != 0.0) {
      throw InvalidArgument("exterior data must vanish in the domain");
    }
  }
  if (g.values().col(0).cwiseAbs().maxCoeff() != 0.0) {
    throw InvalidArgument("exterior data must vanish at t = 0");
  }
}

Eigen::MatrixXd ForwardSolver::exterior_source(const SpaceTimeField& g) const {
  return -a_ie_ * g.block(op_.grid(), Region::exterior);
}

SolveReport ForwardSolver::picard_source(const Nonlinearity& nl, const Eigen::MatrixXd& source,
                                         const PicardOptions& opt, const Eigen::MatrixXd* start) const {
  const SpaceGrid& grid = op_.grid();
  const Index K = grid.count(Region::interior);
  if (source.rows() != K || source.cols() != time_.size()) throw InvalidArgument("source has the wrong shape");

  SolveReport rep;
  rep.method = "picard";
  rep.exponents = choose_exponents(nl.empty() ? std::vector<double>{1.0} : nl.exponents(), grid.dim(), op_.order());
  const double b1 = nl.empty() ? 1.0 : nl.exponents().front();
  rep.ball_radius =
      std::sqrt(mixed_norm(grid, time_, source, rep.exponents.q / (b1 + 1.0), rep.exponents.p / (b1 + 1.0)));

  Eigen::MatrixXd u = start ? *start : Eigen::MatrixXd::Zero(K, time_.size());
  if (u.rows() != K || u.cols() != time_.size()) throw InvalidArgument("Picard start has the wrong shape");
  double prev_step = -1.0;
  Index stalled = 0;
  for (Index it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd next = sg_.duhamel(time_, nl.empty() ? source : Eigen::MatrixXd(source - nl.eval(u)));
    const Eigen::MatrixXd diff = next - u;
    const double scale = next.cwiseAbs().maxCoeff();
    rep.residual = scale > 0.0 ? diff.cwiseAbs().maxCoeff() / scale : diff.cwiseAbs().maxCoeff();
    const double step = x_norm(grid, time_, diff, rep.exponents);
    if (prev_step > 0.0) {
      const double ratio = step / prev_step;
      rep.ratios.push_back(ratio);
      stalled = ratio >= 1.0 ? stalled + 1 : 0;
    }
    prev_step = step;
    u = std::move(next);
    rep.iterations = it;
    if (nl.empty()) rep.residual = 0.0;  // the map does not depend on u: exact after one step
    if (rep.residual <= opt.tol) break;
    if (stalled >= opt.stall_window) {
      std::ostringstream os;
      os << "Picard iteration is not contracting (ratio " << rep.ratios.back() << " after " << it
         << " iterations); the data are too large";
      throw NonContractionError(os.str());
    }
    if (it == opt.max_iter) {
      std::ostringstream os;
      os << "Picard iteration did not reach tolerance " << opt.tol << " in " << opt.max_iter
         << " iterations (residual " << rep.residual << ")";
      throw SolverError(os.str());
    }
  }
  rep.solution_x_norm = x_norm(grid, time_, u, rep.exponents);
  rep.u = SpaceTimeField::from_block(grid, time_, Region::interior, u);
  return rep;
}

SolveReport ForwardSolver::solve(const Nonlinearity& nl, const SpaceTimeField& g, const PicardOptions& opt,
                                 const SpaceTimeField* f, const Eigen::MatrixXd* start) const {
  check_exterior_data(g);
  Eigen::MatrixXd source = exterior_source(g);
  if (f) source += interior_block(op_.grid(), *f);
  SolveReport rep = picard_source(nl, source, opt, start);
  rep.u += g;
  return rep;
}

SpaceTimeField ForwardSolver::solve_linear(const SpaceTimeField& g) const {
  check_exterior_data(g);
  SpaceTimeField u = SpaceTimeField::from_block(op_.grid(), time_, Region::interior,
                                                sg_.duhamel(time_, exterior_source(g)));
  u += g;
  return u;
}

double ForwardSolver::pde_residual(const Nonlinearity& nl, const SpaceTimeField& u, const SpaceTimeField* f) const {
  const SpaceGrid& grid = op_.grid();
  const Eigen::MatrixXd ui = interior_block(grid, u);
  const Eigen::MatrixXd au = op_.block(Region::interior, Region::everywhere) * u.values();
  const Eigen::MatrixXd nu = nl.eval(ui);
  const Eigen::MatrixXd fi = f ? interior_block(grid, *f) : Eigen::MatrixXd::Zero(ui.rows(), ui.cols());
  const Eigen::MatrixXd lift = a_ie_ * u.block(grid, Region::exterior);
  const double scale = std::max(lift.cwiseAbs().maxCoeff(), fi.cwiseAbs().maxCoeff());
  double worst = 0.0;
  const double dt = time_.dt();
  for (Index j = 0; j + 1 < time_.size(); ++j) {
    const Eigen::VectorXd r = (ui.col(j + 1) - ui.col(j)) / dt + 0.5 * (au.col(j) + au.col(j + 1)) +
                              0.5 * (nu.col(j) + nu.col(j + 1)) - 0.5 * (fi.col(j) + fi.col(j + 1));
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return scale > 0.0 ? worst / scale : worst;
}

SpaceTimeField imex_oracle(const FracOperator& op, const TimeGrid& time, const Nonlinearity& nl,
                           const SpaceTimeField& g, const SpaceTimeField* f) {
  const SpaceGrid& grid = op.grid();
  if (g.nodes() != grid.size() || g.times() != time.size()) throw InvalidArgument("exterior data has the wrong shape");
  const double dt = time.dt();
  const Eigen::MatrixXd a_ii = op.block(Region::interior, Region::interior);
  const Eigen::MatrixXd a_ie = op.block(Region::interior, Region::exterior);
  const Index K = a_ii.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd::Identity(K, K) + dt * a_ii);
  if (llt.info() != Eigen::Success) throw SolverError("I + dt A_II is not positive definite");
  const Eigen::MatrixXd lift = a_ie * g.block(grid, Region::exterior);
  const Eigen::MatrixXd fi = f ? f->block(grid, Region::interior) : Eigen::MatrixXd::Zero(K, time.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(K, time.size());
  for (Index j = 0; j + 1 < time.size(); ++j) {
    Eigen::VectorXd rhs = u.col(j) + dt * (fi.col(j + 1) - lift.col(j + 1));
    if (!nl.empty()) {
      // explicit nonlinearity on the current slice only
      Nonlinearity slice;
      for (const auto& term : nl.terms()) slice.add_term(term.exponent, term.coefficient.col(j));
      rhs -= dt * slice.eval(u.col(j));
    }
    u.col(j + 1) = llt.solve(rhs);
  }
  SpaceTimeField out = SpaceTimeField::from_block(grid, time, Region::interior, u);
  out += g;
  return out;
}

LinfReport check_linf_bound(const SpaceGrid& grid, const TimeGrid& time, const SpaceTimeField& u,
                            const SpaceTimeField* f, const SpaceTimeField& g, double slack) {
  LinfReport rep;
  const double fmax = f ? linf_norm(grid, *f, Region::interior) : 0.0;
  rep.bound = time.horizon() * fmax + linf_norm(grid, g, Region::exterior) + slack;
  Index r = 0, c = 0;
  rep.value = u.values().cwiseAbs().maxCoeff(&r, &c);
  rep.worst_node = r;
  rep.worst_step = c;
  rep.holds = rep.value <= rep.bound;
  return rep;
}

UniquenessReport check_uniqueness(const ForwardSolver& solver, const Nonlinearity& nl, const SpaceTimeField& g,
                                  const PicardOptions& opt) {
  const SpaceGrid& grid = solver.grid();
  const TimeGrid& time = solver.time();
  const SpaceTimeField imex = imex_oracle(solver.op(), time, nl, g);
  const Eigen::MatrixXd lift = interior_block(grid, solver.solve_linear(g));
  const Eigen::MatrixXd imex_start = interior_block(grid, imex);
  std::vector<Eigen::MatrixXd> runs;
  runs.push_back(interior_block(grid, solver.solve(nl, g, opt).u));
  runs.push_back(interior_block(grid, solver.solve(nl, g, opt, nullptr, &lift).u));
  runs.push_back(interior_block(grid, solver.solve(nl, g, opt, nullptr, &imex_start).u));
  UniquenessReport rep;
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      rep.pairwise.push_back(rel_l2(grid, time, runs[a], runs[b]));
      rep.max_distance = std::max(rep.max_distance, rep.pairwise.back());
    }
  }
  rep.imex_distance = rel_l2(grid, time, runs[0], imex_start);
  return rep;
}

}  // namespace fracdiff
