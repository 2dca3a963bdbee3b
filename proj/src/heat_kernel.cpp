#include "fracdiff/heat_kernel.hpp"

#include "fracdiff/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <sstream>

namespace fracdiff {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kPi = std::numbers::pi;
constexpr int kMaxSeriesTerms = 400;

template <class F>
double adaptive(F&& f, double a, double b, double& error) {
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13, &err);
  error += err;
  return v;
}

// First piece of a Fourier integral: e^{-xi^{2s}} has an algebraic singularity at xi = 0.
template <class F>
double endpoint_singular(F&& f, double a, double b, double& error) {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  double err = 0.0;
  const double v = rule.integrate(f, a, b, 1e-14, &err);
  error += err;
  return v;
}

// int_0^xi_max cos(r xi) amp(xi) dxi, summed over the half-periods of the cosine.
template <class F>
double cosine_transform(double r, F&& amp, double xi_max, double& error, double& scale) {
  auto f = [&](double xi) { return std::cos(r * xi) * amp(xi); };
  const double step = r > 0.0 ? std::min(kPi / r, 4.0) : 4.0;
  double a = 0.0;
  double b = r > 0.0 && kPi / r <= 4.0 ? 0.5 * kPi / r : step;
  double sum = 0.0;
  while (a < xi_max) {
    const double piece = a == 0.0 ? endpoint_singular(f, a, b, error) : adaptive(f, a, b, error);
    sum += piece;
    scale = std::max(scale, std::abs(piece));
    a = b;
    b += step;
  }
  return sum;
}

}  // namespace

HeatKernel::HeatKernel(int dim, double s, KernelConvention convention)
    : dim_(dim), s_(s), convention_(convention), series_radius_(0.0) {
  if (dim != 1 && dim != 2) throw InvalidArgument("heat kernel dimension must be 1 or 2");
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("fractional order s must lie in (0, 1)");
  // smallest radius where the large-|x| expansion converges to double precision
  for (double r : {3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0}) {
    double v = 0.0;
    if (profile_series(r, v)) {
      series_radius_ = r;
      break;
    }
  }
  if (series_radius_ == 0.0) series_radius_ = std::numeric_limits<double>::infinity();
}

double HeatKernel::series_log_envelope(int k) const {
  const double sk = s_ * k;
  return std::lgamma(sk + 0.5 * dim_) + std::lgamma(sk + 1.0) + sk * std::log(4.0) - std::lgamma(k + 1.0) -
         (0.5 * dim_ + 1.0) * std::log(kPi);
}

double HeatKernel::series_coefficient(int k) const {
  // K(x, 1) ~ sum_k c_k |x|^{-n - 2sk}
  const double sign = (k % 2 == 1) ? 1.0 : -1.0;
  return sign * std::sin(kPi * s_ * k) * std::exp(series_log_envelope(k));
}

bool HeatKernel::profile_series(double r, double& value) const {
  double sum = 0.0;
  double prev_envelope = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kMaxSeriesTerms; ++k) {
    const double power = dim_ + 2.0 * s_ * k;
    const double envelope = std::exp(series_log_envelope(k) - power * std::log(r));
    sum += series_coefficient(k) * std::pow(r, -power);
    if (k >= 2 && sum > 0.0 && envelope < 1e-17 * sum) {
      value = sum;
      return true;
    }
    if (k >= 4 && envelope > prev_envelope) return false;  // asymptotic series started to diverge
    prev_envelope = envelope;
  }
  return false;
}

double HeatKernel::profile_quadrature(double r) const {
  // cut the Fourier integral where e^{-xi^{2s}} < e^{-42}
  const double xi_max = std::pow(42.0, 1.0 / (2.0 * s_));
  double error = 0.0;
  double sum = 0.0;
  double scale = 0.0;
  if (dim_ == 1) {
    sum = cosine_transform(r, [&](double xi) { return std::exp(-std::pow(xi, 2.0 * s_)); }, xi_max, error, scale);
    sum /= kPi;
    error /= kPi;
    scale /= kPi;
  } else {
    auto f = [&](double rho) {
      return boost::math::cyl_bessel_j(0, r * rho) * std::exp(-std::pow(rho, 2.0 * s_)) * rho;
    };
    double a = 0.0;
    if (r * xi_max < 2.0) {
      for (double b = 4.0; a < xi_max; a = b, b += 4.0) {
        const double piece = a == 0.0 ? endpoint_singular(f, a, b, error) : adaptive(f, a, b, error);
        sum += piece;
        scale = std::max(scale, std::abs(piece));
      }
    } else {
      unsigned k = 1;
      double zero = boost::math::cyl_bessel_j_zero(0.0, k) / r;
      while (a < xi_max) {
        const double b = std::min(zero, a + 4.0);
        const double piece = a == 0.0 ? endpoint_singular(f, a, b, error) : adaptive(f, a, b, error);
        sum += piece;
        scale = std::max(scale, std::abs(piece));
        if (b == zero) zero = boost::math::cyl_bessel_j_zero(0.0, ++k) / r;
        a = b;
      }
    }
    sum /= 2.0 * kPi;
    error /= 2.0 * kPi;
    scale /= 2.0 * kPi;
  }
  if (error > 1e-10 * std::abs(sum) + 1e-15 * scale) {
    std::ostringstream os;
    os << "heat kernel quadrature at |x| = " << r << " missed its tolerance (error estimate " << error
       << ", value " << sum << ")";
    throw QuadratureError(os.str());
  }
  return sum;
}

double HeatKernel::profile(double r) const {
  r = std::abs(r);
  if (r >= series_radius_) {
    double v = 0.0;
    if (profile_series(r, v)) return v;
  }
  return profile_quadrature(r);
}

double HeatKernel::operator()(double r, double t) const {
  if (!(t > 0.0)) throw InvalidArgument("heat kernel needs t > 0");
  const double stretch = std::pow(t, -1.0 / (2.0 * s_));
  double v = std::pow(stretch, dim_) * profile(r * stretch);
  if (convention_ == KernelConvention::unnormalized) v *= std::pow(2.0 * kPi, dim_);
  return v;
}

double HeatKernel::tail_mass(double R, double t) const {
  if (!(t > 0.0)) throw InvalidArgument("heat kernel needs t > 0");
  const double rho = R * std::pow(t, -1.0 / (2.0 * s_));
  const double sphere = dim_ == 1 ? 2.0 : 2.0 * kPi;
  const double start = std::max(rho, series_radius_);
  if (!std::isfinite(start)) throw QuadratureError("large-|x| kernel expansion unavailable for this order");
  double tail = 0.0;
  for (int k = 1; k <= kMaxSeriesTerms; ++k) {
    const double term = series_coefficient(k) * std::pow(start, -2.0 * s_ * k) / (2.0 * s_ * k);
    tail += term;
    const double envelope = std::exp(series_log_envelope(k) - 2.0 * s_ * k * std::log(start)) / (2.0 * s_ * k);
    if (k >= 2 && envelope < 1e-17 * std::abs(tail)) break;
  }
  tail *= sphere;
  if (rho < start) {
    double error = 0.0;
    auto f = [&](double r) { return sphere * profile(r) * (dim_ == 2 ? r : 1.0); };
    for (double a = rho; a < start; a += 1.0) tail += adaptive(f, a, std::min(a + 1.0, start), error);
  }
  return tail;
}

double HeatKernel::mass(double t) const {
  if (!std::isfinite(series_radius_)) throw QuadratureError("large-|x| kernel expansion unavailable for this order");
  double error = 0.0;
  double inner = 0.0;
  const double sphere = dim_ == 1 ? 2.0 : 2.0 * kPi;
  auto f = [&](double r) { return sphere * profile(r) * (dim_ == 2 ? r : 1.0); };
  for (double a = 0.0; a < series_radius_; a += 0.5) inner += adaptive(f, a, std::min(a + 0.5, series_radius_), error);
  return inner + tail_mass(series_radius_ * std::pow(t, 1.0 / (2.0 * s_)), t);
}

double heat_kernel_eval(int dim, double s, double r, double t) { return HeatKernel(dim, s)(r, t); }

}  // namespace fracdiff
