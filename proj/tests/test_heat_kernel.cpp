#include "doctest.h"

#include "fracdiff/errors.hpp"
#include "fracdiff/heat_kernel.hpp"

#include <cmath>
#include <numbers>

using namespace fracdiff;

TEST_CASE("one-dimensional kernel at s = 1/2 is the Poisson kernel") {
  const HeatKernel k(1, 0.5);
  for (double t : {0.05, 0.3, 1.0, 4.0}) {
    for (double x : {0.0, 0.1, 0.7, 2.5, 20.0, 300.0}) {
      const double exact = t / (std::numbers::pi * (t * t + x * x));
      CHECK(k(x, t) == doctest::Approx(exact).epsilon(1e-9));
    }
  }
}

TEST_CASE("two-dimensional kernel at s = 1/2 is the Poisson kernel") {
  const HeatKernel k(2, 0.5);
  for (double t : {0.1, 1.0, 3.0}) {
    for (double r : {0.0, 0.2, 1.0, 4.0, 50.0}) {
      const double exact = t / (2.0 * std::numbers::pi * std::pow(t * t + r * r, 1.5));
      CHECK(k(r, t) == doctest::Approx(exact).epsilon(1e-8));
    }
  }
}

TEST_CASE("kernel has unit mass") {
  for (double s : {0.3, 0.5, 0.7}) {
    const HeatKernel k(1, s);
    for (double t : {0.1, 1.0}) CHECK(k.mass(t) == doctest::Approx(1.0).epsilon(1e-6));
  }
  for (double s : {0.5, 0.75}) CHECK(HeatKernel(2, s).mass(1.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kernel is positive and radially decreasing") {
  for (int n : {1, 2}) {
    for (double s : {0.3, 0.5, 0.8}) {
      const HeatKernel k(n, s);
      double prev = k.profile(0.0);
      CHECK(prev > 0.0);
      for (double r = 0.05; r < 30.0; r *= 1.3) {
        const double v = k.profile(r);
        CHECK(v > 0.0);
        CHECK(v <= prev * (1.0 + 1e-12));
        prev = v;
      }
    }
  }
}

TEST_CASE("kernel is self-similar in time") {
  for (int n : {1, 2}) {
    const double s = 0.6;
    const HeatKernel k(n, s);
    for (double t : {0.2, 2.0}) {
      for (double r : {0.0, 0.5, 3.0}) {
        const double scaled = std::pow(t, -n / (2.0 * s)) * k.profile(r * std::pow(t, -1.0 / (2.0 * s)));
        CHECK(k(r, t) == doctest::Approx(scaled).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("conventions differ by (2 pi)^n") {
  for (int n : {1, 2}) {
    const HeatKernel a(n, 0.4);
    const HeatKernel b(n, 0.4, KernelConvention::unnormalized);
    CHECK(b(0.7, 0.5) == doctest::Approx(std::pow(2.0 * std::numbers::pi, n) * a(0.7, 0.5)).epsilon(1e-12));
  }
  CHECK(heat_kernel_eval(1, 0.5, 1.0, 1.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("tail mass matches the large-distance decay") {
  const HeatKernel k(1, 0.5);
  // Poisson: mass outside |x| <= R is 1 - (2/pi) atan(R/t)
  for (double R : {10.0, 100.0}) {
    const double exact = 1.0 - 2.0 / std::numbers::pi * std::atan(R);
    CHECK(k.tail_mass(R, 1.0) == doctest::Approx(exact).epsilon(1e-6));
  }
}

TEST_CASE("non-positive times are rejected") {
  const HeatKernel k(1, 0.5);
  CHECK_THROWS_AS(k(1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(k(1.0, -1.0), InvalidArgument);
  CHECK_THROWS_AS(HeatKernel(3, 0.5), InvalidArgument);
}
