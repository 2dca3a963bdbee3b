#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fracdiff {

using Index = Eigen::Index;

/// Open ball |x - center| < radius. In one dimension this is the interval
/// (center - radius, center + radius); only center[0] is used.
struct Ball {
  std::array<double, 2> center{0.0, 0.0};
  double radius = 0.0;

  static Ball interval(double lo, double hi) {
    return Ball{{0.5 * (lo + hi), 0.0}, 0.5 * (hi - lo)};
  }
};

/// A window is a finite union of open balls.
struct WindowSpec {
  std::string name;
  std::vector<Ball> parts;
};

/// Node subsets of the spatial grid. Also used as the support tag of fields.
enum class Region { everywhere, interior, exterior, control, observation };

std::string to_string(Region region);

struct GridSpec {
  int dim = 1;
  double half_width = 4.0;  // L, the box is [-L, L]^dim
  double spacing = 1.0 / 32.0;
  Ball omega = Ball::interval(-1.0, 1.0);
  WindowSpec control{"control", {}};
  WindowSpec observation{"observation", {}};
  /// Minimum distance between the closure of the domain and the box boundary.
  /// Negative means "one grid spacing".
  double exterior_margin = -1.0;
};

/// Uniform tensor grid on the truncation box [-L, L]^n with domain and window
/// masks. Immutable after construction.
class SpaceGrid {
 public:
  /// Validates the spec and builds the masks.
  /// Throws GeometryError on overlapping windows or a domain that does not fit.
  explicit SpaceGrid(const GridSpec& spec);

  int dim() const { return spec_.dim; }
  double spacing() const { return spec_.spacing; }
  double half_width() const { return spec_.half_width; }
  /// Nodes along each axis, 2L/h + 1.
  Index nodes_per_axis() const { return per_axis_; }
  Index size() const { return static_cast<Index>(coords_.size()); }
  /// h^n, the rectangle-rule weight of one node.
  double cell_volume() const { return cell_volume_; }
  const GridSpec& spec() const { return spec_; }

  const std::array<double, 2>& coord(Index node) const { return coords_[static_cast<std::size_t>(node)]; }
  /// Integer lattice coordinates of a node.
  std::array<Index, 2> lattice(Index node) const;
  Index node_at(Index i, Index j = 0) const { return i + per_axis_ * j; }

  bool in(Region region, Index node) const;
  const std::vector<Index>& indices(Region region) const;
  Index count(Region region) const { return static_cast<Index>(indices(region).size()); }
  /// Position of `node` within indices(region), or -1.
  Index position(Region region, Index node) const;

  double distance(Index a, Index b) const;

 private:
  GridSpec spec_;
  Index per_axis_ = 0;
  double cell_volume_ = 0.0;
  std::vector<std::array<double, 2>> coords_;
  std::array<std::vector<char>, 5> masks_;
  std::array<std::vector<Index>, 5> indices_;
  std::array<std::vector<Index>, 5> positions_;
};

/// Uniform time grid t_j = j * T / N_t, j = 0..N_t.
class TimeGrid {
 public:
  TimeGrid(double horizon, Index steps);

  double horizon() const { return horizon_; }
  Index steps() const { return steps_; }
  Index size() const { return steps_ + 1; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }
  double at(Index j) const { return dt() * static_cast<double>(j); }
  /// Trapezoid weights over [0, T].
  const Eigen::VectorXd& weights() const { return weights_; }
  /// Grid with `factor` times as many steps on the same horizon.
  TimeGrid refined(Index factor) const { return TimeGrid(horizon_, steps_ * factor); }

 private:
  double horizon_;
  Index steps_;
  Eigen::VectorXd weights_;
};

/// Real values on every grid node and time node; values outside the support
/// region are exactly zero.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(const SpaceGrid& grid, const TimeGrid& time, Region support);

  /// Builds a field whose rows over `support` are given by `block`
  /// (count(support) x time.size()).
  static SpaceTimeField from_block(const SpaceGrid& grid, const TimeGrid& time, Region support,
                                   const Eigen::MatrixXd& block);

  Region support() const { return support_; }
  Index nodes() const { return values_.rows(); }
  Index times() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(Index node, Index step) const { return values_(node, step); }

  /// Throws InvalidArgument when writing a nonzero outside the support.
  void set(const SpaceGrid& grid, Index node, Index step, double value);

  /// Rows of `region` (count(region) x times()).
  Eigen::MatrixXd block(const SpaceGrid& grid, Region region) const;

  SpaceTimeField& operator+=(const SpaceTimeField& other);
  SpaceTimeField& operator*=(double factor);

 private:
  Region support_ = Region::everywhere;
  Eigen::MatrixXd values_;
};

/// Widest support containing both regions.
Region merged_support(Region a, Region b);

SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator*(double factor, SpaceTimeField a);

/// (sum over nodes in region, steps j of f^2 h^n w_j)^(1/2) with trapezoid w_j.
double l2_spacetime_norm(const SpaceGrid& grid, const TimeGrid& time, const SpaceTimeField& f,
                         Region region);
/// Same norm for a block whose rows are already restricted to some region.
double l2_spacetime_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block);

double linf_norm(const SpaceGrid& grid, const SpaceTimeField& f, Region region);

}  // namespace fracdiff
