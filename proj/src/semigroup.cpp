#include "fracdiff/semigroup.hpp"

#include "fracdiff/errors.hpp"
#include "fracdiff/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracdiff {

namespace {

Eigen::VectorXd extend_interior(const SpaceGrid& grid, const Eigen::VectorXd& f) {
  const auto& inner = grid.indices(Region::interior);
  if (f.size() != static_cast<Index>(inner.size())) throw InvalidArgument("expected a field on interior nodes");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(grid.size());
  for (std::size_t k = 0; k < inner.size(); ++k) full(inner[k]) = f(static_cast<Index>(k));
  return full;
}

Eigen::VectorXd restrict_interior(const SpaceGrid& grid, const Eigen::VectorXd& full) {
  const auto& inner = grid.indices(Region::interior);
  Eigen::VectorXd f(static_cast<Index>(inner.size()));
  for (std::size_t k = 0; k < inner.size(); ++k) f(static_cast<Index>(k)) = full(inner[k]);
  return f;
}

template <class Apply>
DecayReport decay_report(Apply&& apply, const Eigen::VectorXd& f, double cell_volume, int dim, double s, double r,
                         double p, const std::vector<double>& times) {
  if (times.size() < 3) throw InvalidArgument("decay fit needs at least 3 times");
  if (!(r >= 1.0 && r <= p)) throw InvalidArgument("decay check needs 1 <= r <= p");
  DecayReport rep;
  rep.r = r;
  rep.p = p;
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  rep.theory_exponent = -dim / (2.0 * s) * (1.0 / r - inv_p);
  const double fr = lebesgue_norm(f, r, cell_volume);
  if (!(fr > 0.0)) throw InvalidArgument("decay check needs a nonzero field");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> ratios;
  for (double t : times) {
    if (!(t > 0.0)) throw InvalidArgument("decay times must be positive");
    DecayRow row;
    row.t = t;
    row.norm = lebesgue_norm(apply(t), p, cell_volume);
    row.bound = std::pow(t, rep.theory_exponent) * fr;
    row.ratio = row.norm / row.bound;
    rep.rows.push_back(row);
    ratios.push_back(row.ratio);
    const double x = std::log(t);
    const double y = std::log(row.norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(times.size());
  const double denom = m * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw InvalidArgument("decay fit is degenerate (repeated times)");
  rep.slope = (m * sxy - sx * sy) / denom;
  std::sort(ratios.begin(), ratios.end());
  rep.max_ratio = ratios.back();
  const std::size_t mid = ratios.size() / 2;
  rep.median_ratio = ratios.size() % 2 ? ratios[mid] : 0.5 * (ratios[mid - 1] + ratios[mid]);
  return rep;
}

}  // namespace

RestrictedSemigroup::RestrictedSemigroup(const FracOperator& op) : grid_(op.grid()), s_(op.order()) {
  const Eigen::MatrixXd a = op.block(Region::interior, Region::interior);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw SolverError("eigendecomposition of the interior block failed");
  mu_ = eig.eigenvalues();
  v_ = eig.eigenvectors();
  if (!(mu_(0) > 0.0)) {
    std::ostringstream os;
    os << "interior block is not positive definite (smallest eigenvalue " << mu_(0) << ")";
    throw SolverError(os.str());
  }
  residual_ = ((a * v_) - v_ * mu_.asDiagonal()).colwise().norm().maxCoeff();
}

Eigen::VectorXd RestrictedSemigroup::apply(double t, const Eigen::VectorXd& f) const {
  if (t < 0.0) throw InvalidArgument("semigroup time must be nonnegative");
  if (f.size() != size()) throw InvalidArgument("expected a field on interior nodes");
  const Eigen::VectorXd modes = v_.transpose() * f;
  return v_ * (modes.array() * (-t * mu_.array()).exp()).matrix();
}

Eigen::MatrixXd RestrictedSemigroup::duhamel(const TimeGrid& time, const Eigen::MatrixXd& f) const {
  if (f.rows() != size() || f.cols() != time.size()) throw InvalidArgument("Duhamel source has the wrong shape");
  const double dt = time.dt();
  const Index K = size();
  Eigen::ArrayXd decay(K), left(K), right(K);
  for (Index k = 0; k < K; ++k) {
    const double z = mu_(k) * dt;
    // left = dt (1 - e^{-z}(1 + z)) / z^2, left + right = dt (1 - e^{-z}) / z
    const double full = z > 0.0 ? -std::expm1(-z) / z : 1.0;
    const double l = z < 1e-4 ? 0.5 - z / 3.0 + z * z / 8.0 : (1.0 - std::exp(-z) * (1.0 + z)) / (z * z);
    decay(k) = std::exp(-z);
    left(k) = dt * l;
    right(k) = dt * full - left(k);
  }
  const Eigen::MatrixXd modes = v_.transpose() * f;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(K, f.cols());
  for (Index j = 0; j + 1 < f.cols(); ++j) {
    g.col(j + 1) = decay * g.col(j).array() + left * modes.col(j).array() + right * modes.col(j + 1).array();
  }
  return v_ * g;
}

SpaceTimeField RestrictedSemigroup::duhamel(const TimeGrid& time, const SpaceTimeField& f) const {
  return SpaceTimeField::from_block(grid_, time, Region::interior, duhamel(time, f.block(grid_, Region::interior)));
}

FreeSemigroup::FreeSemigroup(const SpaceGrid& grid, double s) : grid_(grid), kernel_(grid.dim(), s) {}

Eigen::VectorXd FreeSemigroup::apply(double t, const Eigen::VectorXd& f) const { return apply(t, f, grid_); }

Eigen::VectorXd FreeSemigroup::apply(double t, const Eigen::VectorXd& f, const SpaceGrid& target) const {
  if (f.size() != grid_.size()) throw InvalidArgument("free semigroup expects a field on all nodes");
  if (t < 0.0) throw InvalidArgument("semigroup time must be nonnegative");
  const double h = grid_.spacing();
  if (target.dim() != grid_.dim() || std::abs(target.spacing() - h) > 1e-12 * h) {
    throw InvalidArgument("evaluation grid must share dimension and spacing");
  }
  const double shift = (target.half_width() - grid_.half_width()) / h;  // target lattice index of grid() node 0
  if (std::abs(shift - std::round(shift)) > 1e-9) throw InvalidArgument("evaluation grid is not node-aligned");
  const Index offset = static_cast<Index>(std::llround(shift));

  std::vector<Index> support;
  for (Index j = 0; j < f.size(); ++j) {
    if (f(j) != 0.0) support.push_back(j);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(target.size());
  if (t == 0.0) {
    for (Index j : support) {
      const auto l = grid_.lattice(j);
      const Index i0 = l[0] + offset;
      const Index i1 = grid_.dim() == 2 ? l[1] + offset : 0;
      if (i0 >= 0 && i0 < target.nodes_per_axis() && i1 >= 0 && i1 < target.nodes_per_axis()) {
        out(target.node_at(i0, i1)) = f(j);
      }
    }
    return out;
  }
  // kernel weights by |lattice offset|; in 2-D keyed by the sorted pair
  const Index reach = target.nodes_per_axis() + grid_.nodes_per_axis();
  const double hn = grid_.cell_volume();
  std::vector<double> table;
  if (grid_.dim() == 1) {
    table.assign(static_cast<std::size_t>(reach), -1.0);
  } else {
    table.assign(static_cast<std::size_t>(reach * reach), -1.0);
  }
  auto weight = [&](Index d0, Index d1) {
    d0 = std::abs(d0);
    d1 = std::abs(d1);
    if (d0 < d1) std::swap(d0, d1);
    const auto key = static_cast<std::size_t>(grid_.dim() == 1 ? d0 : d0 * reach + d1);
    double& w = table[key];
    if (w < 0.0) w = kernel_(h * std::hypot(static_cast<double>(d0), static_cast<double>(d1)), t) * hn;
    return w;
  };
  for (Index i = 0; i < target.size(); ++i) {
    const auto li = target.lattice(i);
    double acc = 0.0;
    for (Index j : support) {
      const auto lj = grid_.lattice(j);
      acc += weight(li[0] - lj[0] - offset, grid_.dim() == 2 ? li[1] - lj[1] - offset : 0) * f(j);
    }
    out(i) = acc;
  }
  return out;
}

DecayReport check_decay_free(const FreeSemigroup& sg, const Eigen::VectorXd& f, double r, double p,
                             const std::vector<double>& times) {
  const SpaceGrid& grid = sg.grid();
  return decay_report([&](double t) { return sg.apply(t, f); }, f, grid.cell_volume(), grid.dim(),
                      sg.kernel().order(), r, p, times);
}

DecayReport check_decay_restricted(const RestrictedSemigroup& sg, const Eigen::VectorXd& f, double r, double p,
                                   const std::vector<double>& times) {
  const SpaceGrid& grid = sg.grid();
  return decay_report([&](double t) { return sg.apply(t, f); }, f, grid.cell_volume(), grid.dim(), sg.order(), r,
                      p, times);
}

ComparisonReport check_comparison(const RestrictedSemigroup& restricted, const FreeSemigroup& free,
                                  const Eigen::VectorXd& f, double t, double slack) {
  const SpaceGrid& grid = restricted.grid();
  const Eigen::VectorXd abs_f = f.cwiseAbs();
  const Eigen::VectorXd lhs = restricted.apply(t, f).cwiseAbs();
  const Eigen::VectorXd mid = restricted.apply(t, abs_f);
  const Eigen::VectorXd rhs = restrict_interior(grid, free.apply(t, extend_interior(grid, abs_f)));
  ComparisonReport rep;
  rep.slack = slack;
  const Eigen::VectorXd g1 = lhs - mid;
  const Eigen::VectorXd g2 = mid - rhs;
  Index k1 = 0, k2 = 0;
  rep.first_gap = g1.maxCoeff(&k1);
  rep.second_gap = g2.maxCoeff(&k2);
  const auto& inner = grid.indices(Region::interior);
  rep.first_node = inner[static_cast<std::size_t>(k1)];
  rep.second_node = inner[static_cast<std::size_t>(k2)];
  rep.holds = rep.first_gap <= slack && rep.second_gap <= slack;
  return rep;
}

}  // namespace fracdiff
