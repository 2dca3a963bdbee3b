#include "doctest.h"

#include "fracdiff/errors.hpp"
#include "fracdiff/fracop.hpp"
#include "support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

using namespace fracdiff;
using namespace fracdiff::testing;

namespace {

double constant_oracle(int n, double s) {
  return std::pow(4.0, s) * std::tgamma(0.5 * n + s) /
         (std::pow(std::numbers::pi, 0.5 * n) * std::abs(std::tgamma(-s)));
}

}  // namespace

TEST_CASE("normalizing constant matches closed forms") {
  CHECK(fractional_constant(1, 0.5) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
  CHECK(fractional_constant(2, 0.5) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-14));
  for (int n : {1, 2}) {
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      CHECK(fractional_constant(n, s) == doctest::Approx(constant_oracle(n, s)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(assemble_frac_laplacian(SpaceGrid(desk_spec()), 1.0), InvalidArgument);
  CHECK_THROWS_AS(assemble_frac_laplacian(SpaceGrid(desk_spec()), 0.0), InvalidArgument);
}

TEST_CASE("far weights equal the hat-function integral of the kernel") {
  namespace bq = boost::math::quadrature;
  for (double s : {0.25, 0.5, 0.75}) {
    const FractionalStencil stencil(1, s);
    const double a = 1.0 + 2.0 * s;
    for (Index k = 3; k <= 40; k += 7) {
      const double kk = static_cast<double>(k);
      auto hat = [&](double y) { return (1.0 - std::abs(y - kk)) * std::pow(y, -a); };
      const double oracle = bq::gauss_kronrod<double, 31>::integrate(hat, kk - 1.0, kk, 15, 1e-14) +
                            bq::gauss_kronrod<double, 31>::integrate(hat, kk, kk + 1.0, 15, 1e-14);
      CHECK(stencil.weight(k) == doctest::Approx(oracle).epsilon(1e-11));
      CHECK(stencil.weight(-k) == stencil.weight(k));
    }
    CHECK(stencil.weight(1) > 0.0);
    CHECK_THROWS_AS(stencil.weight(0), InvalidArgument);
  }
}

TEST_CASE("operator is symmetric with the expected sign pattern") {
  for (const GridSpec& spec : {desk_spec(), disk_spec()}) {
    for (double s : {0.3, 0.5, 0.8}) {
      const FracOperator op = assemble_frac_laplacian(SpaceGrid(spec), s);
      const Eigen::MatrixXd& A = op.matrix();
      CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::MatrixXd off = A;
      off.diagonal().setConstant(-1.0);
      CHECK(off.maxCoeff() < 0.0);
      CHECK(A.diagonal().minCoeff() > 0.0);
      CHECK(op.tail().minCoeff() > 0.0);
      const Eigen::VectorXd rows = A.rowwise().sum();
      CHECK((rows - op.tail()).cwiseAbs().maxCoeff() <= 1e-10 * A.diagonal().maxCoeff());
    }
  }
}

TEST_CASE("rows sum to zero without the exterior tail") {
  const FracOperator op = assemble_frac_laplacian(SpaceGrid(desk_spec()), 0.5, TailMode::none);
  CHECK(op.tail().cwiseAbs().maxCoeff() == 0.0);
  CHECK(op.matrix().rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10 * op.matrix().diagonal().maxCoeff());
}

TEST_CASE("interior block is positive definite") {
  for (const GridSpec& spec : {desk_spec(), disk_spec()}) {
    const FracOperator op = assemble_frac_laplacian(SpaceGrid(spec), 0.5);
    const Eigen::MatrixXd aii = op.block(Region::interior, Region::interior);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(aii);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("lattice symbol approaches |xi|^2s at second order") {
  for (double s : {0.3, 0.5, 0.7}) {
    const FractionalStencil stencil(1, s);
    for (double xi : {1.0, 2.0}) {
      const double exact = std::pow(xi, 2.0 * s);
      const double coarse = std::abs(lattice_symbol(stencil, 1.0 / 32, {xi, 0.0}) - exact) / exact;
      const double fine = std::abs(lattice_symbol(stencil, 1.0 / 64, {xi, 0.0}) - exact) / exact;
      CHECK(coarse <= 0.05);
      CHECK(fine <= 0.05);
      CHECK(coarse / fine >= 1.5);
    }
  }
  const FractionalStencil plane(2, 0.5);
  const double exact = std::pow(2.0, 0.5);
  CHECK(std::abs(lattice_symbol(plane, 1.0 / 8, {1.0, 1.0}) - exact) / exact <= 0.05);
}

TEST_CASE("bilinear form matches the quadratic form of the matrix") {
  std::mt19937_64 rng(3);
  for (const GridSpec& spec : {desk_spec(1.0 / 16), disk_spec()}) {
    const FracOperator op = assemble_frac_laplacian(SpaceGrid(spec), 0.5);
    const double hn = op.grid().cell_volume();
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd u = random_vector(op.grid().size(), rng);
      const Eigen::VectorXd v = random_vector(op.grid().size(), rng);
      const double form = hn * u.dot(op.matrix() * v);
      CHECK(apply_bilinear(op, u, v) == doctest::Approx(form).epsilon(1e-10));
      CHECK(apply_bilinear(op, u, v) == doctest::Approx(apply_bilinear(op, v, u)).epsilon(1e-12));
      CHECK(apply_bilinear(op, u, u) > 0.0);
    }
  }
}

TEST_CASE("nonlocal Neumann operator lives on the exterior") {
  const SpaceGrid grid(desk_spec());
  const TimeGrid time(1.0, 4);
  const FracOperator op = assemble_frac_laplacian(grid, 0.5);
  Eigen::MatrixXd block = Eigen::MatrixXd::Ones(grid.count(Region::interior), time.size());
  const SpaceTimeField u = SpaceTimeField::from_block(grid, time, Region::interior, block);
  const SpaceTimeField n = neumann_operator(op, time, u);
  CHECK(n.block(grid, Region::interior).cwiseAbs().maxCoeff() == 0.0);
  // u = 0 outside, 1 inside: N u(x) = -sum_y w_xy < 0
  CHECK(n.block(grid, Region::exterior).maxCoeff() < 0.0);
  const Index x = grid.indices(Region::exterior).front();
  double expected = 0.0;
  for (Index y : grid.indices(Region::interior)) expected += op.matrix()(x, y);
  CHECK(n(x, 2) == doctest::Approx(expected).epsilon(1e-13));
}
