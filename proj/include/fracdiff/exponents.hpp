#pragma once

#include "fracdiff/geometry.hpp"

#include <string>
#include <vector>

namespace fracdiff {

/// Exponents (q, p, r) of the space-time norms used by the fixed-point
/// argument. Entries may be +infinity.
struct AdmissibleTriple {
  double q = 0.0;
  double p = 0.0;
  double r = 0.0;
};

/// 1/q = (n/2s)(1/r - 1/p); +infinity when r == p.
double admissible_q(double p, double r, int dim, double s);

/// 1 < r <= p, p < nr/(n - 2s) when n > 2s, and the scaling identity for q.
bool admissible(const AdmissibleTriple& e, int dim, double s, double tol = 1e-12);

/// Integer r just above max{n b_m/2s, 2(b_m + 1)}, then p just above r with
/// p/r below min{n/(n - 2s), b_1 + 1} (the first bound is dropped when n <= 2s),
/// then q from the scaling identity. `log`, when given, receives one line per
/// intermediate quantity. Throws InvalidArgument for an unsorted or empty list
/// and SolverError when the p window is empty.
AdmissibleTriple choose_exponents(const std::vector<double>& b, int dim, double s,
                                  std::vector<std::string>* log = nullptr);

/// (sum |v_i|^p h^n)^{1/p}; max |v_i| for p = infinity.
double lebesgue_norm(const Eigen::VectorXd& v, double p, double cell_volume);

/// L^{time_exp}(0, T; L^{space_exp}) norm of a block (rows: nodes, cols: time
/// steps) with trapezoid weights in time.
double mixed_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block, double time_exp,
                  double space_exp);

/// ||u||_X = ||u||_{L^q(0,T;L^p)} + ||u||_{L^inf(0,T;L^r)}.
double x_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block,
              const AdmissibleTriple& e);

}  // namespace fracdiff
