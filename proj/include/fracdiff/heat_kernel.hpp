#pragma once

namespace fracdiff {

enum class KernelConvention {
  normalized,   ///< (2 pi)^{-n} int e^{i x.xi - t|xi|^{2s}} dxi, unit mass
  unnormalized  ///< the bare Fourier integral, mass (2 pi)^n
};

/// Fundamental solution of u_t + (-Delta)^s u = 0 in R^n, n in {1, 2}.
/// Evaluated through the self-similar profile K(x, t) = t^{-n/2s} K(t^{-1/2s} x, 1).
/// The profile is a radial oscillatory integral summed between consecutive
/// zeros of the cosine / Bessel factor; far from the origin the convergent
/// (or asymptotic) large-|x| expansion is used instead.
class HeatKernel {
 public:
  HeatKernel(int dim, double s, KernelConvention convention = KernelConvention::normalized);

  int dim() const { return dim_; }
  double order() const { return s_; }
  KernelConvention convention() const { return convention_; }

  /// K(x, t) for |x| = r. Throws InvalidArgument for t <= 0 and
  /// QuadratureError when the requested tolerance is not met.
  double operator()(double r, double t) const;
  /// Normalized profile K(x, 1), |x| = r.
  double profile(double r) const;
  /// Normalized mass of K(., t) outside the ball |x| <= R, from the large-|x| expansion.
  double tail_mass(double R, double t) const;
  /// Normalized mass of K(., t) by quadrature of the profile plus tail_mass.
  double mass(double t) const;

 private:
  double profile_quadrature(double r) const;
  /// Returns false when the expansion does not reach double precision at r.
  bool profile_series(double r, double& value) const;
  double series_log_envelope(int k) const;
  double series_coefficient(int k) const;

  int dim_;
  double s_;
  KernelConvention convention_;
  double series_radius_;  // |x| beyond which the expansion is trusted
};

/// Normalized kernel value at |x| = r.
double heat_kernel_eval(int dim, double s, double r, double t);

}  // namespace fracdiff
