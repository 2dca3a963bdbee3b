#include "fracdiff/geometry.hpp"

#include "fracdiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracdiff {

namespace {

constexpr std::size_t slot(Region r) { return static_cast<std::size_t>(r); }

double ball_distance(const Ball& a, const Ball& b, int dim) {
  const double dx = a.center[0] - b.center[0];
  const double dy = dim == 2 ? a.center[1] - b.center[1] : 0.0;
  return std::hypot(dx, dy);
}

bool inside(const Ball& ball, const std::array<double, 2>& x, int dim, double slack) {
  const double dx = x[0] - ball.center[0];
  const double dy = dim == 2 ? x[1] - ball.center[1] : 0.0;
  return std::hypot(dx, dy) < ball.radius - slack;
}

bool inside_any(const WindowSpec& w, const std::array<double, 2>& x, int dim, double slack) {
  return std::any_of(w.parts.begin(), w.parts.end(),
                     [&](const Ball& b) { return inside(b, x, dim, slack); });
}

std::string describe(const Ball& b, int dim) {
  std::ostringstream os;
  if (dim == 1) {
    os << "(" << b.center[0] - b.radius << ", " << b.center[0] + b.radius << ")";
  } else {
    os << "ball[(" << b.center[0] << ", " << b.center[1] << "), r=" << b.radius << "]";
  }
  return os.str();
}

}  // namespace

std::string to_string(Region region) {
  switch (region) {
    case Region::everywhere: return "everywhere";
    case Region::interior: return "interior";
    case Region::exterior: return "exterior";
    case Region::control: return "control";
    case Region::observation: return "observation";
  }
  return "unknown";
}

SpaceGrid::SpaceGrid(const GridSpec& spec) : spec_(spec) {
  const int n = spec.dim;
  if (n != 1 && n != 2) throw GeometryError("grid dimension must be 1 or 2");
  if (!(spec.spacing > 0.0)) throw GeometryError("grid spacing must be positive");
  if (!(spec.half_width > 0.0)) throw GeometryError("truncation radius must be positive");
  const double cells = 2.0 * spec.half_width / spec.spacing;
  if (std::abs(cells - std::round(cells)) > 1e-9 * cells) {
    throw GeometryError("2L/h must be an integer");
  }
  if (!(spec.omega.radius > 0.0)) throw GeometryError("domain radius must be positive");
  per_axis_ = static_cast<Index>(std::llround(cells)) + 1;
  cell_volume_ = std::pow(spec.spacing, n);

  const double margin = spec.exterior_margin < 0.0 ? spec.spacing : spec.exterior_margin;
  for (int axis = 0; axis < n; ++axis) {
    const double reach = std::abs(spec.omega.center[static_cast<std::size_t>(axis)]) + spec.omega.radius;
    if (reach + margin > spec.half_width + 1e-12) {
      std::ostringstream os;
      os << "domain " << describe(spec.omega, n) << " does not fit inside the box [-" << spec.half_width
         << ", " << spec.half_width << "]^" << n << " with exterior margin " << margin;
      throw GeometryError(os.str());
    }
  }

  for (const WindowSpec* w : {&spec.control, &spec.observation}) {
    if (w->parts.empty()) throw GeometryError("window '" + w->name + "' is empty");
    for (const Ball& b : w->parts) {
      if (!(b.radius > 0.0)) throw GeometryError("window '" + w->name + "' has a non-positive radius");
      if (ball_distance(b, spec.omega, n) < b.radius + spec.omega.radius - 1e-12) {
        throw GeometryError("window '" + w->name + "' part " + describe(b, n) +
                            " intersects the closure of the domain " + describe(spec.omega, n));
      }
    }
  }
  for (const Ball& a : spec.control.parts) {
    for (const Ball& b : spec.observation.parts) {
      if (ball_distance(a, b, n) < a.radius + b.radius - 1e-12) {
        throw GeometryError("windows overlap: '" + spec.control.name + "' part " + describe(a, n) +
                            " and '" + spec.observation.name + "' part " + describe(b, n));
      }
    }
  }

  const Index total = n == 1 ? per_axis_ : per_axis_ * per_axis_;
  coords_.resize(static_cast<std::size_t>(total));
  for (auto& m : masks_) m.assign(static_cast<std::size_t>(total), 0);
  const double slack = 1e-9 * spec.spacing;
  for (Index node = 0; node < total; ++node) {
    const Index i = node % per_axis_;
    const Index j = node / per_axis_;
    auto& x = coords_[static_cast<std::size_t>(node)];
    x[0] = -spec.half_width + spec.spacing * static_cast<double>(i);
    x[1] = n == 2 ? -spec.half_width + spec.spacing * static_cast<double>(j) : 0.0;
    const auto k = static_cast<std::size_t>(node);
    masks_[slot(Region::everywhere)][k] = 1;
    const bool in_omega = inside(spec.omega, x, n, slack);
    masks_[slot(Region::interior)][k] = in_omega;
    masks_[slot(Region::exterior)][k] = !in_omega;
    masks_[slot(Region::control)][k] = !in_omega && inside_any(spec.control, x, n, slack);
    masks_[slot(Region::observation)][k] = !in_omega && inside_any(spec.observation, x, n, slack);
  }
  for (std::size_t r = 0; r < masks_.size(); ++r) {
    positions_[r].assign(static_cast<std::size_t>(total), -1);
    for (Index node = 0; node < total; ++node) {
      if (masks_[r][static_cast<std::size_t>(node)]) {
        positions_[r][static_cast<std::size_t>(node)] = static_cast<Index>(indices_[r].size());
        indices_[r].push_back(node);
      }
    }
  }
  if (indices_[slot(Region::interior)].empty()) throw GeometryError("domain contains no grid node");
  if (indices_[slot(Region::control)].empty()) throw GeometryError("control window contains no grid node");
  if (indices_[slot(Region::observation)].empty()) {
    throw GeometryError("observation window contains no grid node");
  }
}

std::array<Index, 2> SpaceGrid::lattice(Index node) const {
  return {node % per_axis_, spec_.dim == 2 ? node / per_axis_ : 0};
}

bool SpaceGrid::in(Region region, Index node) const {
  return masks_[slot(region)][static_cast<std::size_t>(node)] != 0;
}

const std::vector<Index>& SpaceGrid::indices(Region region) const { return indices_[slot(region)]; }

Index SpaceGrid::position(Region region, Index node) const {
  return positions_[slot(region)][static_cast<std::size_t>(node)];
}

double SpaceGrid::distance(Index a, Index b) const {
  const auto& x = coord(a);
  const auto& y = coord(b);
  return std::hypot(x[0] - y[0], x[1] - y[1]);
}

TimeGrid::TimeGrid(double horizon, Index steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0)) throw InvalidArgument("time horizon must be positive");
  if (steps < 2) throw InvalidArgument("time grid needs at least 2 steps");
  weights_ = Eigen::VectorXd::Constant(steps + 1, dt());
  weights_(0) *= 0.5;
  weights_(steps) *= 0.5;
}

SpaceTimeField::SpaceTimeField(const SpaceGrid& grid, const TimeGrid& time, Region support)
    : support_(support), values_(Eigen::MatrixXd::Zero(grid.size(), time.size())) {}

SpaceTimeField SpaceTimeField::from_block(const SpaceGrid& grid, const TimeGrid& time, Region support,
                                          const Eigen::MatrixXd& block) {
  const auto& idx = grid.indices(support);
  if (block.rows() != static_cast<Index>(idx.size()) || block.cols() != time.size()) {
    throw InvalidArgument("block shape does not match region " + to_string(support));
  }
  SpaceTimeField f(grid, time, support);
  for (std::size_t k = 0; k < idx.size(); ++k) f.values_.row(idx[k]) = block.row(static_cast<Index>(k));
  return f;
}

void SpaceTimeField::set(const SpaceGrid& grid, Index node, Index step, double value) {
  if (value != 0.0 && !grid.in(support_, node)) {
    throw InvalidArgument("write outside the support of a " + to_string(support_) + " field");
  }
  values_(node, step) = value;
}

Eigen::MatrixXd SpaceTimeField::block(const SpaceGrid& grid, Region region) const {
  const auto& idx = grid.indices(region);
  Eigen::MatrixXd out(static_cast<Index>(idx.size()), values_.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = values_.row(idx[k]);
  return out;
}

Region merged_support(Region a, Region b) {
  if (a == b) return a;
  const auto exterior_like = [](Region r) {
    return r == Region::exterior || r == Region::control || r == Region::observation;
  };
  if (exterior_like(a) && exterior_like(b)) return Region::exterior;
  return Region::everywhere;
}

SpaceTimeField& SpaceTimeField::operator+=(const SpaceTimeField& other) {
  if (values_.rows() != other.values_.rows() || values_.cols() != other.values_.cols()) {
    throw InvalidArgument("field shapes differ");
  }
  values_ += other.values_;
  support_ = merged_support(support_, other.support_);
  return *this;
}

SpaceTimeField& SpaceTimeField::operator*=(double factor) {
  values_ *= factor;
  return *this;
}

SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }

SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) {
  SpaceTimeField nb = b;
  nb *= -1.0;
  return a += nb;
}

SpaceTimeField operator*(double factor, SpaceTimeField a) { return a *= factor; }

double l2_spacetime_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block) {
  if (block.cols() != time.size()) throw InvalidArgument("block has the wrong number of time steps");
  const Eigen::VectorXd col_sq = block.colwise().squaredNorm().transpose();
  return std::sqrt(grid.cell_volume() * col_sq.dot(time.weights()));
}

double l2_spacetime_norm(const SpaceGrid& grid, const TimeGrid& time, const SpaceTimeField& f,
                         Region region) {
  return l2_spacetime_norm(grid, time, f.block(grid, region));
}

double linf_norm(const SpaceGrid& grid, const SpaceTimeField& f, Region region) {
  double m = 0.0;
  for (Index node : grid.indices(region)) m = std::max(m, f.values().row(node).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace fracdiff
