#include "fracdiff/fracop.hpp"

#include "fracdiff/errors.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numbers>

namespace fracdiff {

namespace {

using boost::math::quadrature::gauss;

// Cells of the near square [-1, 1]^n are handled by the Taylor correction.
constexpr Index kAsymptotic1d = 2000;
constexpr Index kAsymptotic2d = 48;
constexpr Index kMomentCells2d = 256;

double check_order(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("fractional order s must lie in (0, 1)");
  return s;
}

// int_lo^hi g(u) du for smooth g on a unit-length cell.
template <class F>
double cell_integral(F&& g, double lo, double hi) {
  return gauss<double, 20>::integrate(g, lo, hi);
}

template <class F>
double square_integral(F&& g, double x0, double y0, int points) {
  // tensor Gauss-Legendre on [x0, x0 + 1] x [y0, y0 + 1]
  auto inner = [&](double x) {
    auto gy = [&](double y) { return g(x, y); };
    return points > 8 ? gauss<double, 15>::integrate(gy, y0, y0 + 1.0)
                      : gauss<double, 7>::integrate(gy, y0, y0 + 1.0);
  };
  return points > 8 ? gauss<double, 15>::integrate(inner, x0, x0 + 1.0)
                    : gauss<double, 7>::integrate(inner, x0, x0 + 1.0);
}

}  // namespace

double fractional_constant(int dim, double s) {
  check_order(s);
  const double pi = std::numbers::pi;
  return std::pow(4.0, s) * std::tgamma(0.5 * dim + s) /
         (std::pow(pi, 0.5 * dim) * std::abs(std::tgamma(-s)));
}

FractionalStencil::FractionalStencil(int dim, double s) : dim_(dim), s_(check_order(s)) {
  if (dim != 1 && dim != 2) throw InvalidArgument("stencil dimension must be 1 or 2");
  const double a = dim + 2.0 * s;  // kernel exponent
  if (dim == 1) {
    // q = sum_k int_k^{k+1} (u - k)(k + 1 - u) u^{-a} du, the interpolation-error moment
    double q = 0.0;
    for (Index k = 1; k < kAsymptotic1d; ++k) {
      const double kk = static_cast<double>(k);
      q += cell_integral([&](double u) { return (u - kk) * (kk + 1.0 - u) * std::pow(u, -a); }, kk, kk + 1.0);
    }
    const double K = static_cast<double>(kAsymptotic1d);
    q += std::pow(K, -2.0 * s) / (12.0 * s) - a * std::pow(K, -a - 1.0) / 360.0;
    near_ = 1.0 / (2.0 - 2.0 * s) - q;
    total_ = 2.0 * (1.0 / (2.0 * s) + near_);
  } else {
    const double quarter = std::numbers::pi / 4.0;
    const double J = 8.0 / (2.0 - 2.0 * s) *
                     gauss<double, 30>::integrate([&](double th) { return std::pow(std::cos(th), 2.0 * s - 2.0); },
                                                  0.0, quarter);
    const double E = 8.0 / (2.0 * s) *
                     gauss<double, 30>::integrate([&](double th) { return std::pow(std::cos(th), 2.0 * s); },
                                                  0.0, quarter);
    double m = 0.0;
    for (Index c1 = 0; c1 < kMomentCells2d; ++c1) {
      for (Index c2 = 0; c2 < kMomentCells2d; ++c2) {
        if (c1 == 0 && c2 == 0) continue;
        const double x0 = static_cast<double>(c1);
        const double y0 = static_cast<double>(c2);
        m += square_integral(
            [&](double x, double y) { return (x - x0) * (x0 + 1.0 - x) * std::pow(x * x + y * y, -0.5 * a); }, x0,
            y0, std::max(c1, c2) <= 2 ? 16 : 8);
      }
    }
    m += E * std::pow(static_cast<double>(kMomentCells2d), -2.0 * s) / 24.0;
    m *= 4.0;
    near_ = J / 4.0 - m / 2.0;
    total_ = E + 4.0 * near_;
  }
}

double FractionalStencil::far_weight_1d(Index k) const {
  const double a = 1.0 + 2.0 * s_;
  const double kk = static_cast<double>(k);
  if (k >= kAsymptotic1d) {
    return std::pow(kk, -a) + a * (a + 1.0) * std::pow(kk, -a - 2.0) / 12.0;
  }
  double w = cell_integral([&](double u) { return (kk + 1.0 - u) * std::pow(u, -a); }, kk, kk + 1.0);
  if (k >= 2) w += cell_integral([&](double u) { return (u - kk + 1.0) * std::pow(u, -a); }, kk - 1.0, kk);
  return w;
}

double FractionalStencil::far_weight_2d(Index k1, Index k2) const {
  const double a = 2.0 + 2.0 * s_;
  if (std::max(k1, k2) >= kAsymptotic2d) {
    const double r2 = static_cast<double>(k1 * k1 + k2 * k2);
    return std::pow(r2, -0.5 * a) + a * a * std::pow(r2, -0.5 * a - 1.0) / 12.0;
  }
  const double x = static_cast<double>(k1);
  const double y = static_cast<double>(k2);
  double w = 0.0;
  for (Index c1 = k1 - 1; c1 <= k1; ++c1) {
    for (Index c2 = k2 - 1; c2 <= k2; ++c2) {
      if ((c1 == -1 || c1 == 0) && (c2 == -1 || c2 == 0)) continue;
      w += square_integral(
          [&](double u, double v) {
            return (1.0 - std::abs(u - x)) * (1.0 - std::abs(v - y)) * std::pow(u * u + v * v, -0.5 * a);
          },
          static_cast<double>(c1), static_cast<double>(c2), 16);
    }
  }
  return w;
}

void FractionalStencil::reserve(Index reach) const {
  if (reach <= reach_) return;
  if (dim_ == 1) {
    table_.assign(static_cast<std::size_t>(reach + 1), 0.0);
    for (Index k = 1; k <= reach; ++k) table_[static_cast<std::size_t>(k)] = far_weight_1d(k);
    table_[1] += near_;
  } else {
    const Index stride = reach + 1;
    table_.assign(static_cast<std::size_t>(stride * stride), 0.0);
    for (Index k1 = 0; k1 <= reach; ++k1) {
      for (Index k2 = k1; k2 <= reach; ++k2) {
        if (k1 == 0 && k2 == 0) continue;
        const double w = far_weight_2d(k1, k2);
        table_[static_cast<std::size_t>(k1 * stride + k2)] = w;
        table_[static_cast<std::size_t>(k2 * stride + k1)] = w;
      }
    }
    table_[1] += near_;
    table_[static_cast<std::size_t>(stride)] += near_;
  }
  reach_ = reach;
}

double FractionalStencil::weight(Index k1, Index k2) const {
  k1 = std::abs(k1);
  k2 = std::abs(k2);
  if (k1 == 0 && k2 == 0) throw InvalidArgument("stencil weight requested at zero offset");
  if (dim_ == 1) {
    if (k2 != 0) throw InvalidArgument("1-D stencil has no second offset");
    if (k1 <= reach_) return table_[static_cast<std::size_t>(k1)];
    return far_weight_1d(k1) + (k1 == 1 ? near_ : 0.0);
  }
  if (k1 <= reach_ && k2 <= reach_) return table_[static_cast<std::size_t>(k1 * (reach_ + 1) + k2)];
  return far_weight_2d(k1, k2) + ((k1 + k2 == 1) ? near_ : 0.0);
}

double FractionalStencil::tail_sum(Index first) const {
  if (dim_ != 1) throw InvalidArgument("tail_sum is only defined in one dimension");
  if (first < 1) throw InvalidArgument("tail_sum needs first >= 1");
  const double a = 1.0 + 2.0 * s_;
  if (first == 1) return 1.0 / (2.0 * s_) + near_;
  const double K = static_cast<double>(first);
  const double rise = cell_integral([&](double u) { return (u - K + 1.0) * std::pow(u, -a); }, K - 1.0, K);
  return rise + std::pow(K, -2.0 * s_) / (2.0 * s_);
}

FracOperator::FracOperator(SpaceGrid grid, double s, double constant, TailMode mode, Eigen::MatrixXd matrix,
                           Eigen::VectorXd tail)
    : grid_(std::move(grid)),
      s_(s),
      constant_(constant),
      mode_(mode),
      matrix_(std::move(matrix)),
      tail_(std::move(tail)) {}

Eigen::MatrixXd FracOperator::block(Region rows, Region cols) const {
  const auto& ri = grid_.indices(rows);
  const auto& ci = grid_.indices(cols);
  Eigen::MatrixXd out(static_cast<Index>(ri.size()), static_cast<Index>(ci.size()));
  for (std::size_t a = 0; a < ri.size(); ++a) {
    for (std::size_t b = 0; b < ci.size(); ++b) {
      out(static_cast<Index>(a), static_cast<Index>(b)) = matrix_(ri[a], ci[b]);
    }
  }
  return out;
}

FracOperator assemble_frac_laplacian(const SpaceGrid& grid, double s, TailMode mode) {
  check_order(s);
  const int n = grid.dim();
  const double c = fractional_constant(n, s);
  const double scale = c * std::pow(grid.spacing(), -2.0 * s);
  const Index N = grid.size();
  const Index per_axis = grid.nodes_per_axis();

  FractionalStencil stencil(n, s);
  stencil.reserve(per_axis - 1);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(N);
  for (Index i = 0; i < N; ++i) {
    const auto li = grid.lattice(i);
    double in_box = 0.0;
    for (Index j = 0; j < N; ++j) {
      if (j == i) continue;
      const auto lj = grid.lattice(j);
      const double w = stencil.weight(li[0] - lj[0], li[1] - lj[1]);
      A(i, j) = -scale * w;
      in_box += w;
    }
    if (mode == TailMode::analytic) {
      if (n == 1) {
        tail(i) = stencil.tail_sum(li[0] + 1) + stencil.tail_sum(per_axis - li[0]);
      } else {
        tail(i) = stencil.total() - in_box;
      }
      tail(i) *= scale;
    }
    A(i, i) = scale * in_box + tail(i);
  }
  // exact symmetry; the weights only depend on |i - j| but summation order differs
  A = 0.5 * (A + A.transpose()).eval();
  return FracOperator(grid, s, c, mode, std::move(A), std::move(tail));
}

double lattice_symbol(const FractionalStencil& stencil, double h, const std::array<double, 2>& xi) {
  const double s = stencil.order();
  const double scale = fractional_constant(stencil.dim(), s) * std::pow(h, -2.0 * s);
  if (stencil.dim() == 1) {
    const Index K = static_cast<Index>(std::ceil(2000.0 / h));
    double sum = 0.0;
    for (Index k = 1; k <= K; ++k) {
      sum += stencil.weight(k) * (2.0 - 2.0 * std::cos(xi[0] * h * static_cast<double>(k)));
    }
    // beyond K the cosine averages out; keep the non-oscillatory part
    sum += 2.0 * stencil.tail_sum(K + 1);
    return scale * sum;
  }
  const Index K = static_cast<Index>(std::ceil(64.0 / h));
  double sum = 0.0;
  double inside = 0.0;
  for (Index k1 = -K; k1 <= K; ++k1) {
    for (Index k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double w = stencil.weight(k1, k2);
      inside += w;
      sum += w * (1.0 - std::cos(h * (xi[0] * static_cast<double>(k1) + xi[1] * static_cast<double>(k2))));
    }
  }
  sum += stencil.total() - inside;
  return scale * sum;
}

double apply_bilinear(const FracOperator& op, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const Eigen::MatrixXd& A = op.matrix();
  const Index N = A.rows();
  if (u.size() != N || v.size() != N) throw InvalidArgument("bilinear form: field size mismatch");
  double pair_sum = 0.0;
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < N; ++j) {
      if (i == j) continue;
      pair_sum += -A(i, j) * (u(i) - u(j)) * (v(i) - v(j));
    }
  }
  const double h_n = op.grid().cell_volume();
  return h_n * (0.5 * pair_sum + op.tail().cwiseProduct(u).dot(v));
}

SpaceTimeField neumann_operator(const FracOperator& op, const TimeGrid& time, const SpaceTimeField& u) {
  const SpaceGrid& grid = op.grid();
  if (u.nodes() != grid.size() || u.times() != time.size()) throw InvalidArgument("field shape mismatch");
  const auto& inner = grid.indices(Region::interior);
  const auto& ext = grid.indices(Region::exterior);
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(static_cast<Index>(ext.size()), time.size());
  for (std::size_t k = 0; k < ext.size(); ++k) {
    const Index x = ext[k];
    for (Index y : inner) {
      const double w = -op.matrix()(x, y);
      block.row(static_cast<Index>(k)) += w * (u.values().row(x) - u.values().row(y));
    }
  }
  return SpaceTimeField::from_block(grid, time, Region::exterior, block);
}

}  // namespace fracdiff
