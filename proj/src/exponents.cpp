#include "fracdiff/exponents.hpp"

#include "fracdiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fracdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inverse(double x) { return std::isinf(x) ? 0.0 : 1.0 / x; }

}  // namespace

double admissible_q(double p, double r, int dim, double s) {
  const double inv_q = dim / (2.0 * s) * (inverse(r) - inverse(p));
  return inv_q <= 0.0 ? kInf : 1.0 / inv_q;
}

bool admissible(const AdmissibleTriple& e, int dim, double s, double tol) {
  if (!(e.r > 1.0) || !(e.r <= e.p) || !(e.q >= 1.0)) return false;
  if (dim > 2.0 * s && !(e.p < dim * e.r / (dim - 2.0 * s))) return false;
  const double lhs = inverse(e.q);
  const double rhs = dim / (2.0 * s) * (inverse(e.r) - inverse(e.p));
  return std::abs(lhs - rhs) <= tol * std::max(1.0, std::abs(rhs));
}

AdmissibleTriple choose_exponents(const std::vector<double>& b, int dim, double s, std::vector<std::string>* log) {
  if (b.empty()) throw InvalidArgument("exponent list is empty");
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (!(b[k] > 0.0)) throw InvalidArgument("exponents b_k must be positive");
    if (k > 0 && !(b[k] > b[k - 1])) throw InvalidArgument("exponents b_k must be strictly increasing");
  }
  const double b1 = b.front();
  const double bm = b.back();
  const double r_floor = std::max(dim * bm / (2.0 * s), 2.0 * (bm + 1.0));
  const double r = std::floor(r_floor) + 1.0;
  const double sobolev_cap = dim > 2.0 * s ? dim / (dim - 2.0 * s) : kInf;
  const double ratio_cap = std::min(sobolev_cap, b1 + 1.0);
  double p = r + 1.0;
  if (!(p / r < ratio_cap)) p = 0.5 * (r + r * ratio_cap);
  if (!(p > r && p / r < ratio_cap)) throw SolverError("no admissible p between r and the ratio cap");
  AdmissibleTriple e{admissible_q(p, r, dim, s), p, r};
  if (log) {
    std::ostringstream os;
    os << "r_floor=" << r_floor << " r=" << r << " sobolev_cap=" << sobolev_cap << " ratio_cap=" << ratio_cap
       << " p=" << p << " q=" << e.q;
    log->push_back(os.str());
    for (double bk : b) {
      std::ostringstream ok;
      ok << "b=" << bk << " decay_exponent=" << 1.0 - dim * bk / (2.0 * r * s) << " q/(b+1)=" << e.q / (bk + 1.0)
         << " p/(b+1)=" << p / (bk + 1.0);
      log->push_back(ok.str());
    }
  }
  if (!admissible(e, dim, s)) throw SolverError("chosen exponents are not admissible");
  return e;
}

double lebesgue_norm(const Eigen::VectorXd& v, double p, double cell_volume) {
  if (v.size() == 0) return 0.0;
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  return std::pow(v.cwiseAbs().array().pow(p).sum() * cell_volume, 1.0 / p);
}

double mixed_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block, double time_exp,
                  double space_exp) {
  if (block.cols() != time.size()) throw InvalidArgument("block has the wrong number of time steps");
  Eigen::VectorXd slices(block.cols());
  for (Index j = 0; j < block.cols(); ++j) slices(j) = lebesgue_norm(block.col(j), space_exp, grid.cell_volume());
  if (std::isinf(time_exp)) return slices.maxCoeff();
  return std::pow(slices.array().pow(time_exp).matrix().dot(time.weights()), 1.0 / time_exp);
}

double x_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block,
              const AdmissibleTriple& e) {
  return mixed_norm(grid, time, block, e.q, e.p) + mixed_norm(grid, time, block, kInf, e.r);
}

}  // namespace fracdiff
