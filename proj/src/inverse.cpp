#include "fracdiff/inverse.hpp"

#include "fracdiff/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fracdiff {

namespace {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

Eigen::MatrixXd observation_rows(const FracOperator& op) { return op.block(Region::observation, Region::everywhere); }

// Replaces guarded entries by the value at the nearest unguarded node of the
// same time step (or of the nearest step when a whole step is guarded).
void fill_guarded(const SpaceGrid& grid, const Mask& ok, Eigen::MatrixXd& a) {
  const auto& inner = grid.indices(Region::interior);
  const Index K = a.rows();
  std::vector<Index> good_steps;
  for (Index j = 0; j < a.cols(); ++j) {
    if (ok.col(j).any()) good_steps.push_back(j);
  }
  if (good_steps.empty()) throw RecoveryError("every node is guarded; the control does not reach the domain");
  for (Index j = 0; j < a.cols(); ++j) {
    Index src = j;
    if (!ok.col(j).any()) {
      src = *std::min_element(good_steps.begin(), good_steps.end(),
                              [j](Index x, Index y) { return std::abs(x - j) < std::abs(y - j); });
    }
    for (Index i = 0; i < K; ++i) {
      if (ok(i, j) && src == j) continue;
      if (src != j && ok(i, src)) {
        a(i, j) = a(i, src);
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      Index pick = -1;
      for (Index k = 0; k < K; ++k) {
        if (!ok(k, src)) continue;
        const double d = grid.distance(inner[static_cast<std::size_t>(i)], inner[static_cast<std::size_t>(k)]);
        if (d < best) {
          best = d;
          pick = k;
        }
      }
      a(i, j) = a(pick, src);
    }
  }
}

Nonlinearity estimated_system(const std::vector<double>& b, const std::vector<Eigen::MatrixXd>& a) {
  Nonlinearity nl;
  for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) nl.add_term(b[k], a[k].cwiseMax(0.0));
  return nl;
}

}  // namespace

DtNMeasurement dtn(const ForwardSolver& solver, const Nonlinearity& nl, const SpaceTimeField& g, double lambda,
                   const PicardOptions& opt) {
  SpaceTimeField data = g;
  data *= lambda;
  const SolveReport rep = solver.solve(nl, data, opt);
  return DtNMeasurement{lambda, observation_rows(solver.op()) * rep.u.values()};
}

SimulatedSource::SimulatedSource(const ForwardSolver& solver, Nonlinearity nl, SpaceTimeField g, PicardOptions opt)
    : solver_(solver), nl_(std::move(nl)), g_(std::move(g)), opt_(opt) {}

DtNMeasurement SimulatedSource::measure(double lambda) const { return dtn(solver_, nl_, g_, lambda, opt_); }

RecordedSource::RecordedSource(const std::string& csv_path, const SpaceGrid& grid, const TimeGrid& time) {
  namespace fs = std::filesystem;
  const fs::path csv(csv_path);
  fs::path header = csv;
  header.replace_extension(".json");
  if (!fs::exists(csv)) throw ConfigError("measurement file '" + csv_path + "' does not exist");
  if (!fs::exists(header)) throw ConfigError("measurement header '" + header.string() + "' does not exist");
  try {
    std::ifstream hs(header);
    const auto j = nlohmann::json::parse(hs);
    grid_hash_ = j.value("grid_hash", "");
    control_hash_ = j.value("control_hash", "");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("measurement header '" + header.string() + "': " + e.what());
  }
  std::ifstream in(csv);
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("lambda", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell[4];
    for (auto& c : cell) {
      if (!std::getline(row, c, ',')) {
        throw ConfigError(csv_path + ":" + std::to_string(lineno) + ": expected lambda,node,step,value");
      }
    }
    double lambda = 0.0, value = 0.0;
    Index node = 0, step = 0;
    try {
      lambda = std::stod(cell[0]);
      node = std::stol(cell[1]);
      step = std::stol(cell[2]);
      value = std::stod(cell[3]);
    } catch (const std::exception&) {
      throw ConfigError(csv_path + ":" + std::to_string(lineno) + ": malformed number");
    }
    if (node < 0 || node >= grid.size() || !grid.in(Region::observation, node)) {
      throw ConfigError(csv_path + ":" + std::to_string(lineno) + ": node is not in the observation window");
    }
    if (step < 0 || step >= time.size()) throw ConfigError(csv_path + ":" + std::to_string(lineno) + ": bad step");
    auto it = data_.find(lambda);
    if (it == data_.end()) {
      it = data_.emplace(lambda, Eigen::MatrixXd::Zero(grid.count(Region::observation), time.size())).first;
      lambdas_.push_back(lambda);
    }
    it->second(grid.position(Region::observation, node), step) = value;
  }
  std::sort(lambdas_.begin(), lambdas_.end());
}

DtNMeasurement RecordedSource::measure(double lambda) const {
  for (const auto& [key, values] : data_) {
    if (std::abs(key - lambda) <= 1e-12 * std::abs(lambda)) return DtNMeasurement{key, values};
  }
  std::ostringstream os;
  os << "no recorded measurement for lambda = " << lambda;
  throw RecoveryError(os.str());
}

LinearizationGap linearization_gap(const ForwardSolver& solver, const Nonlinearity& nl, const SpaceTimeField& g,
                                   double lambda, const PicardOptions& opt) {
  if (!(lambda > 0.0)) throw InvalidArgument("probe amplitude lambda must be positive");
  SpaceTimeField data = g;
  data *= lambda;
  SpaceTimeField scaled = solver.solve(nl, data, opt).u;
  scaled *= 1.0 / lambda;
  LinearizationGap out;
  out.v = solver.solve_linear(g) - scaled;
  out.linf = out.v.values().cwiseAbs().maxCoeff();
  return out;
}

double linearization_bound(const TimeGrid& time, const Nonlinearity& nl, const SpaceTimeField& g, double lambda) {
  const double gmax = g.values().cwiseAbs().maxCoeff();
  double sum = 0.0;
  for (const auto& term : nl.terms()) {
    sum += std::pow(lambda, term.exponent) * term.coefficient.cwiseAbs().maxCoeff() *
           std::pow(gmax, term.exponent + 1.0);
  }
  return time.horizon() * sum;
}

double observation_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block) {
  return l2_spacetime_norm(grid, time, block);
}

std::vector<Eigen::MatrixXd> defects(const MeasurementSource& system, const DtNMeasurement& reference,
                                     const std::vector<double>& lambdas) {
  std::vector<Eigen::MatrixXd> out;
  for (double lambda : lambdas) out.push_back(system.measure(lambda).values - lambda * reference.values);
  return out;
}

namespace {

ExponentFit slope_fit(std::vector<double> lambdas, std::vector<double> norms, double noise_floor) {
  std::vector<std::size_t> order(lambdas.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });
  ExponentFit fit;
  fit.noise_floor = noise_floor;
  for (std::size_t k : order) {
    fit.lambdas.push_back(lambdas[k]);
    fit.defect_norms.push_back(norms[k]);
  }
  // usable range: above the floor and growing with lambda, starting from the largest probe
  std::vector<std::size_t> usable;
  for (std::size_t k = fit.lambdas.size(); k-- > 0;) {
    if (fit.defect_norms[k] <= 100.0 * noise_floor) break;
    if (!usable.empty() && !(fit.defect_norms[k] < fit.defect_norms[usable.back()])) break;
    usable.push_back(k);
  }
  if (usable.size() < 2) throw RecoveryError("no nonlinear signal above the noise floor");
  std::reverse(usable.begin(), usable.end());
  for (std::size_t k : usable) fit.used.push_back(fit.lambdas[k]);
  const std::size_t a = usable[0];
  const std::size_t b = usable[1];
  fit.slope = std::log(fit.defect_norms[b] / fit.defect_norms[a]) / std::log(fit.lambdas[b] / fit.lambdas[a]);
  fit.exponent = fit.slope - 1.0;
  return fit;
}

}  // namespace

ExponentFit fit_exponent(const SpaceGrid& grid, const TimeGrid& time, const std::vector<double>& lambdas,
                         const std::vector<Eigen::MatrixXd>& d, double noise_floor) {
  if (lambdas.size() != d.size()) throw InvalidArgument("one defect per probe amplitude is required");
  std::vector<double> norms;
  for (const auto& block : d) norms.push_back(observation_norm(grid, time, block));
  return slope_fit(lambdas, norms, noise_floor);
}

ExponentFit recover_exponent(const MeasurementSource& system, const DtNMeasurement& reference,
                             const std::vector<double>& lambdas, double noise_floor) {
  if (lambdas.size() < 2) throw InvalidArgument("exponent fit needs at least two probe amplitudes");
  // unit weights: the measurement carries no grid
  std::vector<double> norms;
  for (const auto& block : defects(system, reference, lambdas)) norms.push_back(block.norm());
  return slope_fit(lambdas, norms, noise_floor);
}

ExponentScan scan_exponents(const SpaceGrid& grid, const TimeGrid& time, const std::vector<double>& lambdas,
                            const std::vector<Eigen::MatrixXd>& d, std::size_t terms, double noise_floor) {
  if (lambdas.size() != d.size()) throw InvalidArgument("one defect per probe amplitude is required");
  if (terms == 0) throw InvalidArgument("at least one exponent must be scanned");
  std::vector<std::size_t> order(lambdas.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });
  std::vector<std::size_t> usable;
  for (std::size_t k : order) {
    if (observation_norm(grid, time, d[k]) > 100.0 * noise_floor) usable.push_back(k);
  }
  if (usable.size() < 2) throw RecoveryError("no nonlinear signal above the noise floor");
  const double rho = lambdas[usable[1]] / lambdas[usable[0]];
  for (std::size_t k = 1; k < usable.size(); ++k) {
    const double ratio = lambdas[usable[k]] / lambdas[usable[k - 1]];
    if (std::abs(ratio - rho) > 1e-9 * rho || !(rho > 1.0)) {
      throw InvalidArgument("exponent scan needs consecutive probes on a geometric grid");
    }
  }
  ExponentScan out;
  for (std::size_t k : usable) out.used.push_back(lambdas[k]);
  // model order: one beyond the requested terms when the probes allow it
  const Index n = static_cast<Index>(usable.size());
  Index m = static_cast<Index>(terms) + 1;
  if (n < m + 1) m = static_cast<Index>(terms);
  if (n < m + 1) throw RecoveryError("too few probes above the noise floor for the exponent scan");
  out.model_order = m;

  // D_{k+m} + sum_j p_j D_{k+j} = 0 for every observation entry and shift k
  const Index entries = d[usable[0]].size();
  const Index shifts = n - m;
  Eigen::MatrixXd a(entries * shifts, m);
  Eigen::VectorXd rhs(entries * shifts);
  for (Index k = 0; k < shifts; ++k) {
    for (Index j = 0; j < m; ++j) {
      const auto& block = d[usable[static_cast<std::size_t>(k + j)]];
      a.col(j).segment(k * entries, entries) = Eigen::Map<const Eigen::VectorXd>(block.data(), entries);
    }
    const auto& next = d[usable[static_cast<std::size_t>(k + m)]];
    rhs.segment(k * entries, entries) = -Eigen::Map<const Eigen::VectorXd>(next.data(), entries);
  }
  const Eigen::VectorXd scale = a.colwise().norm().transpose();
  const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd p = as.colPivHouseholderQr().solve(rhs).cwiseQuotient(scale);
  out.residual = (a * p - rhs).norm() / rhs.norm();

  // roots of z^m + p_{m-1} z^{m-1} + ... + p_0 via the companion matrix
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  if (m > 1) companion.bottomLeftCorner(m - 1, m - 1).setIdentity();
  companion.col(m - 1) = -p;
  const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion).eigenvalues();
  for (Index j = 0; j < m; ++j) out.roots.push_back(std::log(std::abs(roots(j))) / std::log(rho) - 1.0);
  std::sort(out.roots.begin(), out.roots.end());
  out.exponents.assign(out.roots.begin(), out.roots.begin() + static_cast<std::ptrdiff_t>(terms));
  return out;
}

SourceInversion::SourceInversion(const ForwardSolver& solver) : solver_(solver) {
  const SpaceGrid& grid = solver.grid();
  const TimeGrid& time = solver.time();
  const Index K = grid.count(Region::interior);
  const Index nt = time.size();
  const Eigen::MatrixXd a_oi = solver.op().block(Region::observation, Region::interior);
  const Index no = a_oi.rows();
  p_.resize(no * nt, K * nt);
  Eigen::MatrixXd pulse = Eigen::MatrixXd::Zero(K, nt);
  for (Index m = 0; m < nt; ++m) {
    for (Index i = 0; i < K; ++i) {
      pulse(i, m) = 1.0;
      const Eigen::MatrixXd response = -a_oi * solver.semigroup().duhamel(time, pulse);
      p_.col(m * K + i) = Eigen::Map<const Eigen::VectorXd>(response.data(), response.size());
      pulse(i, m) = 0.0;
    }
  }
  weight_.resize(no * nt);
  for (Index j = 0; j < nt; ++j) weight_.segment(j * no, no).setConstant(grid.cell_volume() * time.weights()(j));
  normal_ = p_.transpose() * weight_.asDiagonal() * p_;
  trace_scale_ = normal_.trace() / static_cast<double>(normal_.rows());
}

Eigen::MatrixXd SourceInversion::apply(const Eigen::MatrixXd& source) const {
  const Eigen::Map<const Eigen::VectorXd> x(source.data(), source.size());
  const Eigen::VectorXd y = p_ * x;
  const Index nt = solver_.time().size();
  return Eigen::Map<const Eigen::MatrixXd>(y.data(), y.size() / nt, nt);
}

const Eigen::LLT<Eigen::MatrixXd>& SourceInversion::factor(double reg) const {
  auto it = factors_.find(reg);
  if (it != factors_.end()) return it->second;
  Eigen::MatrixXd m = normal_;
  m.diagonal().array() += reg * trace_scale_;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw SolverError("source inversion normal matrix is not positive definite");
  return factors_.emplace(reg, std::move(llt)).first->second;
}

Eigen::MatrixXd SourceInversion::solve(const Eigen::MatrixXd& data, double reg) const {
  const Eigen::Map<const Eigen::VectorXd> y(data.data(), data.size());
  if (y.size() != p_.rows()) throw InvalidArgument("measurement block has the wrong shape");
  const Eigen::VectorXd phi = factor(reg).solve(p_.transpose() * weight_.cwiseProduct(y));
  const Index nt = solver_.time().size();
  return Eigen::Map<const Eigen::MatrixXd>(phi.data(), phi.size() / nt, nt);
}

double SourceInversion::select_regularization(const Eigen::MatrixXd& data, const std::vector<double>& regs,
                                              std::vector<LCurvePoint>* curve) const {
  if (regs.size() < 3) throw InvalidArgument("L-curve selection needs at least three candidates");
  std::vector<double> sorted = regs;
  std::sort(sorted.begin(), sorted.end());
  std::vector<LCurvePoint> pts;
  const Eigen::Map<const Eigen::VectorXd> y(data.data(), data.size());
  for (double reg : sorted) {
    const Eigen::MatrixXd phi = solve(data, reg);
    const Eigen::Map<const Eigen::VectorXd> x(phi.data(), phi.size());
    const Eigen::VectorXd r = p_ * x - y;
    pts.push_back(LCurvePoint{reg, std::sqrt(r.dot(weight_.cwiseProduct(r))), x.norm()});
  }
  // Menger curvature of consecutive points in (log residual, log solution norm)
  double best = -std::numeric_limits<double>::infinity();
  double pick = sorted[sorted.size() / 2];
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const double x0 = std::log(pts[k - 1].residual), y0 = std::log(pts[k - 1].solution);
    const double x1 = std::log(pts[k].residual), y1 = std::log(pts[k].solution);
    const double x2 = std::log(pts[k + 1].residual), y2 = std::log(pts[k + 1].solution);
    const double area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
    const double d01 = std::hypot(x1 - x0, y1 - y0), d12 = std::hypot(x2 - x1, y2 - y1),
                 d02 = std::hypot(x2 - x0, y2 - y0);
    if (d01 * d12 * d02 == 0.0) continue;
    // the corner of an L traversed from small to large reg turns clockwise
    const double kappa = -2.0 * area2 / (d01 * d12 * d02);
    if (kappa > best) {
      best = kappa;
      pick = pts[k].reg;
    }
  }
  if (curve) *curve = pts;
  return pick;
}

double masked_relative_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth, const Mask& mask) {
  double num = 0.0, den = 0.0;
  for (Index j = 0; j < truth.cols(); ++j) {
    for (Index i = 0; i < truth.rows(); ++i) {
      if (!mask(i, j)) continue;
      num += std::pow(estimate(i, j) - truth(i, j), 2);
      den += truth(i, j) * truth(i, j);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

RecoveryResult recover_coefficients(const ForwardSolver& solver, const MeasurementSource& system,
                                    const DtNMeasurement& reference, const SpaceTimeField& control,
                                    const SpaceTimeField& u_g, std::vector<double> b, std::size_t terms,
                                    const RecoveryOptions& opt) {
  const SpaceGrid& grid = solver.grid();
  const TimeGrid& time = solver.time();
  if (terms == 0) throw InvalidArgument("at least one term must be recovered");
  if (!b.empty() && b.size() != terms) throw InvalidArgument("exponent list does not match the number of terms");
  std::vector<double> lambdas = opt.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  if (lambdas.size() < 2) throw InvalidArgument("recovery needs at least two probe amplitudes");

  RecoveryResult res;
  const Eigen::MatrixXd ug = u_g.block(grid, Region::interior);
  const Index K = ug.rows();
  const Index nt = ug.cols();
  res.unguarded = (ug.array().abs() >= opt.guard);
  const Index excluded = (res.unguarded.rightCols(nt - 1).array() == false).count();
  res.guard_fraction = static_cast<double>(excluded) / static_cast<double>(K * (nt - 1));
  if (res.guard_fraction > opt.guard_limit) {
    std::ostringstream os;
    os << "division guard excludes " << 100.0 * res.guard_fraction
       << "% of the nodes; re-synthesize the control with a smaller residual";
    throw RecoveryError(os.str());
  }

  // defects of the unknown system and the a = 0 noise floor
  std::map<double, Eigen::MatrixXd> defect;
  double floor = 0.0;
  const Nonlinearity none;
  for (double lambda : lambdas) {
    defect[lambda] = system.measure(lambda).values - lambda * reference.values;
    const double scale = observation_norm(grid, time, lambda * reference.values);
    floor = std::max({floor, opt.picard.tol * scale,
                      observation_norm(grid, time, dtn(solver, none, control, lambda, opt.picard).values -
                                                       lambda * reference.values)});
  }
  auto defect_at = [&](double lambda) -> const Eigen::MatrixXd& {
    auto it = defect.find(lambda);
    if (it == defect.end()) it = defect.emplace(lambda, system.measure(lambda).values - lambda * reference.values).first;
    return it->second;
  };
  {
    std::vector<Eigen::MatrixXd> d;
    for (double lambda : lambdas) d.push_back(defect_at(lambda));
    res.fits.push_back(fit_exponent(grid, time, lambdas, d, floor));
    if (b.empty()) {
      res.scan = scan_exponents(grid, time, lambdas, d, terms, floor);
      b = res.scan.exponents;
      for (std::size_t k = 1; k < b.size(); ++k) {
        if (!(b[k] > b[k - 1] + 1e-6)) throw RecoveryError("exponent scan found coinciding exponents");
      }
      if (b.front() < 0.0) throw RecoveryError("exponent scan found a negative exponent");
    }
  }

  std::vector<double> stage = opt.stage_lambdas;
  if (stage.empty()) {
    const double lo = res.fits.front().used.front();
    const double hi = lambdas.back();
    for (std::size_t k = 0; k < terms; ++k) {
      const double w = terms == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(terms - 1);
      stage.push_back(lo * std::pow(hi / lo, w));
    }
  }
  if (stage.size() != terms) throw InvalidArgument("one stage amplitude per term is required");
  res.stage_lambdas = stage;

  SourceInversion inversion(solver);
  std::vector<Eigen::MatrixXd> est(terms, Eigen::MatrixXd::Zero(K, nt));
  res.reg_weight = opt.reg_weight;
  if (res.reg_weight < 0.0) {
    res.reg_weight = inversion.select_regularization(defect_at(stage[0]) / std::pow(stage[0], b[0] + 1.0),
                                                     opt.reg_candidates);
  }

  auto predicted = [&](double lambda) {
    const Nonlinearity nl = estimated_system(b, est);
    return Eigen::MatrixXd(dtn(solver, nl, control, lambda, opt.picard).values - lambda * reference.values);
  };
  auto update = [&](std::size_t k) {
    const Eigen::MatrixXd r = defect_at(stage[k]) - predicted(stage[k]);
    const Eigen::MatrixXd phi = inversion.solve(r / std::pow(stage[k], b[k] + 1.0), res.reg_weight);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(K, nt);
    for (Index j = 0; j < nt; ++j) {
      for (Index i = 0; i < K; ++i) {
        if (res.unguarded(i, j)) delta(i, j) = phi(i, j) / signed_power(ug(i, j), b[k]);
      }
    }
    fill_guarded(grid, res.unguarded, delta);
    est[k] += delta;
  };

  for (Index sweep = 0; sweep < opt.sweeps; ++sweep) {
    for (std::size_t k = 0; k < terms; ++k) {
      for (Index it = 0; it < opt.inner; ++it) update(k);
    }
  }

  res.exponents = b;
  for (std::size_t k = 0; k < terms; ++k) {
    const Eigen::MatrixXd r = defect_at(stage[k]) - predicted(stage[k]);
    res.stage_residuals.push_back(observation_norm(grid, time, r) / observation_norm(grid, time, defect_at(stage[k])));
  }
  for (auto& a : est) {
    res.clipped_negative.push_back(static_cast<double>((a.array() < 0.0).count()) / static_cast<double>(a.size()));
    a = a.cwiseMax(0.0);
  }
  res.coefficients = est;
  return res;
}

}  // namespace fracdiff
