#include "doctest.h"

#include "fracdiff/errors.hpp"
#include "fracdiff/semigroup.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace fracdiff;
using namespace fracdiff::testing;

namespace {

struct Desk {
  SpaceGrid grid{desk_spec()};
  FracOperator op = assemble_frac_laplacian(grid, 0.5);
  RestrictedSemigroup sg{op};
};

const Desk& desk() {
  static const Desk d;
  return d;
}

Eigen::VectorXd bump(const SpaceGrid& grid) {
  const auto& inner = grid.indices(Region::interior);
  Eigen::VectorXd f(static_cast<Index>(inner.size()));
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double x = grid.coord(inner[i])[0];
    f(static_cast<Index>(i)) = std::cos(0.5 * std::numbers::pi * x);
  }
  return f;
}

}  // namespace

TEST_CASE("restricted semigroup: identity, composition and spectral bound") {
  const Desk& d = desk();
  std::mt19937_64 rng(1);
  CHECK(d.sg.eigen_residual() <= 1e-9 * d.sg.eigenvalues().maxCoeff());
  CHECK(d.sg.eigenvalues().minCoeff() > 0.0);
  const double mu1 = d.sg.eigenvalues()(0);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd f = random_vector(d.sg.size(), rng);
    CHECK((d.sg.apply(0.0, f) - f).norm() <= 1e-12 * f.norm());
    for (double t : {0.1, 0.5}) {
      const Eigen::VectorXd two = d.sg.apply(t, d.sg.apply(t, f));
      CHECK((two - d.sg.apply(2.0 * t, f)).norm() <= 1e-12 * f.norm());
      CHECK(d.sg.apply(t, f).norm() <= std::exp(-mu1 * t) * f.norm() * (1.0 + 1e-12));
    }
  }
  CHECK_THROWS_AS(d.sg.apply(-0.1, Eigen::VectorXd::Ones(d.sg.size())), InvalidArgument);
}

TEST_CASE("restricted semigroup agrees with the matrix exponential of a small block") {
  const SpaceGrid grid(desk_spec(1.0 / 4));
  const FracOperator op = assemble_frac_laplacian(grid, 0.5);
  const RestrictedSemigroup sg(op);
  const Eigen::MatrixXd a = op.block(Region::interior, Region::interior);
  const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(sg.size(), 1.0, 2.0);
  // implicit Euler with many small steps converges to exp(-tA) f at first order
  const double t = 0.5;
  const Index steps = 20000;
  const Eigen::MatrixXd step = (Eigen::MatrixXd::Identity(a.rows(), a.cols()) + (t / steps) * a).inverse();
  Eigen::VectorXd u = f;
  for (Index k = 0; k < steps; ++k) u = step * u;
  CHECK((u - sg.apply(t, f)).norm() <= 1e-3 * f.norm());
}

TEST_CASE("restricted semigroup preserves positivity") {
  const Desk& d = desk();
  const Eigen::VectorXd f = bump(d.grid);
  for (double t : {0.01, 0.2, 1.0}) CHECK(d.sg.apply(t, f).minCoeff() > -1e-12);
}

TEST_CASE("free semigroup of a point mass is the sampled kernel") {
  const SpaceGrid grid(desk_spec());
  const FreeSemigroup free(grid, 0.5);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(grid.size());
  const Index centre = grid.node_at(grid.nodes_per_axis() / 2);
  delta(centre) = 1.0 / grid.cell_volume();
  const double t = 0.5;
  const Eigen::VectorXd u = free.apply(t, delta);
  for (Index n = 0; n < grid.size(); n += 17) {
    const double x = grid.coord(n)[0];
    CHECK(u(n) == doctest::Approx(t / (std::numbers::pi * (t * t + x * x))).epsilon(1e-8));
  }
  CHECK(u.minCoeff() > 0.0);
  CHECK((free.apply(0.0, delta) - delta).norm() == 0.0);
}

TEST_CASE("free semigroup conserves mass up to the far tail") {
  const SpaceGrid grid(desk_spec());
  GridSpec wide = desk_spec();
  wide.half_width = 64.0;
  const SpaceGrid target(wide);
  const FreeSemigroup free(grid, 0.5);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(grid.size());
  const auto& inner = grid.indices(Region::interior);
  const Eigen::VectorXd b = bump(grid);
  for (std::size_t i = 0; i < inner.size(); ++i) f(inner[i]) = b(static_cast<Index>(i));
  const double mass = f.sum() * grid.cell_volume();
  const double t = 0.5;
  const Eigen::VectorXd u = free.apply(t, f, target);
  const double inside = u.sum() * target.cell_volume();
  // the source sits within distance 1 of the origin
  const double tail = free.kernel().tail_mass(63.0, t);
  CHECK(inside + tail * mass == doctest::Approx(mass).epsilon(2e-3));
}

TEST_CASE("restricted decay follows the scaling rate") {
  const Desk& d = desk();
  const Eigen::VectorXd f = bump(d.grid);
  const DecayReport rep = check_decay_restricted(d.sg, f, 2.0, 4.0, {0.01, 0.02, 0.05, 0.1, 0.2});
  CHECK(rep.theory_exponent == doctest::Approx(-0.25));
  CHECK(rep.max_ratio <= 3.0 * rep.median_ratio);
  CHECK(rep.rows.size() == 5);
  CHECK_THROWS_AS(check_decay_restricted(d.sg, f, 4.0, 2.0, {0.1, 0.2, 0.3}), InvalidArgument);
  CHECK_THROWS_AS(check_decay_restricted(d.sg, f, 2.0, 4.0, {0.1, 0.2}), InvalidArgument);
}

TEST_CASE("comparison principle: restricted against the full lattice semigroup") {
  const Desk& d = desk();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(d.op.matrix());
  const auto& inner = d.grid.indices(Region::interior);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::VectorXd f = random_vector(d.sg.size(), rng);
    const Eigen::VectorXd af = f.cwiseAbs();
    Eigen::VectorXd lifted = Eigen::VectorXd::Zero(d.grid.size());
    for (std::size_t i = 0; i < inner.size(); ++i) lifted(inner[i]) = af(static_cast<Index>(i));
    for (double t : {0.01, 0.1, 0.5}) {
      const Eigen::VectorXd restricted = d.sg.apply(t, af);
      CHECK((d.sg.apply(t, f).cwiseAbs() - restricted).maxCoeff() <= 1e-12);
      const Eigen::VectorXd whole =
          full.eigenvectors() *
          ((-t * full.eigenvalues().array()).exp().matrix().asDiagonal() * (full.eigenvectors().transpose() * lifted));
      for (std::size_t i = 0; i < inner.size(); ++i) {
        CHECK(restricted(static_cast<Index>(i)) <= whole(inner[i]) + 1e-10);
      }
    }
  }
}

TEST_CASE("comparison principle against the free kernel on smooth data") {
  const Desk& d = desk();
  const FreeSemigroup free(d.grid, 0.5);
  for (double t : {0.05, 0.2, 1.0}) {
    const ComparisonReport rep = check_comparison(d.sg, free, bump(d.grid), t, 1e-2);
    CHECK(std::abs(rep.first_gap) <= 1e-12);
    CHECK(rep.second_gap <= 1e-2);
    CHECK(rep.holds);
  }
}

TEST_CASE("Duhamel integral on an eigenvector has the closed form") {
  const Desk& d = desk();
  const TimeGrid time(1.0, 64);
  const Eigen::VectorXd v = d.sg.eigenvectors().col(0);
  const double mu = d.sg.eigenvalues()(0);
  const Eigen::MatrixXd f = v * Eigen::RowVectorXd::Ones(time.size());
  const Eigen::MatrixXd g = d.sg.duhamel(time, f);
  for (Index j = 0; j < time.size(); ++j) {
    const double exact = (1.0 - std::exp(-mu * time.at(j))) / mu;
    CHECK((g.col(j) - exact * v).norm() <= 1e-12);
  }
}

TEST_CASE("Duhamel integral: zero source, unit source bounds") {
  const Desk& d = desk();
  const TimeGrid time(1.0, 32);
  const Index n = d.sg.size();
  CHECK(d.sg.duhamel(time, Eigen::MatrixXd::Zero(n, time.size())).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd g = d.sg.duhamel(time, Eigen::MatrixXd::Ones(n, time.size()));
  CHECK(g.col(0).cwiseAbs().maxCoeff() == 0.0);
  for (Index j = 1; j < time.size(); ++j) {
    CHECK(g.col(j).minCoeff() >= -1e-12);
    CHECK(g.col(j).maxCoeff() <= time.at(j) + 1e-12);
  }
}

TEST_CASE("Duhamel integral converges to backward Euler at first order") {
  // the product rule is exact for sources linear between grid times, so
  // backward Euler on the interpolated source must converge to it at O(dt)
  const Desk& d = desk();
  const TimeGrid time(1.0, 16);
  const Index n = d.sg.size();
  Eigen::MatrixXd f(n, time.size());
  const Eigen::VectorXd b = bump(d.grid);
  for (Index j = 0; j < time.size(); ++j) f.col(j) = std::sin(3.0 * time.at(j)) * b;
  const Eigen::MatrixXd g = d.sg.duhamel(time, f);
  const Eigen::MatrixXd a = d.op.block(Region::interior, Region::interior);
  const auto euler_gap = [&](Index refine) {
    const TimeGrid fine = time.refined(refine);
    const double dt = fine.dt();
    const Eigen::LDLT<Eigen::MatrixXd> solve(Eigen::MatrixXd::Identity(n, n) + dt * a);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    double gap = 0.0;
    for (Index k = 1; k < fine.size(); ++k) {
      const Index j = (k - 1) / refine;
      const double theta = static_cast<double>(k - j * refine) / static_cast<double>(refine);
      const Eigen::VectorXd src = (1.0 - theta) * f.col(j) + theta * f.col(j + 1);
      u = solve.solve(u + dt * src);
      if (k % refine == 0) gap = std::max(gap, (u - g.col(k / refine)).cwiseAbs().maxCoeff());
    }
    return gap;
  };
  const double coarse = euler_gap(16);
  const double fine = euler_gap(64);
  CHECK(fine < coarse);
  CHECK(coarse / fine > 3.0);
}
