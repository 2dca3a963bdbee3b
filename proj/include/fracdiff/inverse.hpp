#pragma once

#include "fracdiff/forward.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace fracdiff {

/// (A u) on observation-window nodes (rows) x time steps (columns) for data lambda g.
struct DtNMeasurement {
  double lambda = 0.0;
  Eigen::MatrixXd values;
};

/// Exterior measurement of the unknown system for the probe lambda g.
class MeasurementSource {
 public:
  virtual ~MeasurementSource() = default;
  virtual DtNMeasurement measure(double lambda) const = 0;
};

/// DtN map of the discrete forward problem with nonlinearity `nl`.
DtNMeasurement dtn(const ForwardSolver& solver, const Nonlinearity& nl, const SpaceTimeField& g, double lambda,
                   const PicardOptions& opt = {});

/// In-process simulator backed by the forward solver.
class SimulatedSource : public MeasurementSource {
 public:
  SimulatedSource(const ForwardSolver& solver, Nonlinearity nl, SpaceTimeField g, PicardOptions opt = {});
  DtNMeasurement measure(double lambda) const override;

 private:
  const ForwardSolver& solver_;
  Nonlinearity nl_;
  SpaceTimeField g_;
  PicardOptions opt_;
};

/// Measurements loaded from CSV rows (lambda, node, step, value) with a JSON
/// header file next to it. Throws ConfigError when either file is missing or
/// malformed and RecoveryError for a lambda that was not recorded.
class RecordedSource : public MeasurementSource {
 public:
  RecordedSource(const std::string& csv_path, const SpaceGrid& grid, const TimeGrid& time);
  DtNMeasurement measure(double lambda) const override;
  const std::vector<double>& lambdas() const { return lambdas_; }
  const std::string& grid_hash() const { return grid_hash_; }
  const std::string& control_hash() const { return control_hash_; }

 private:
  std::map<double, Eigen::MatrixXd> data_;
  std::vector<double> lambdas_;
  std::string grid_hash_;
  std::string control_hash_;
};

struct LinearizationGap {
  double linf = 0.0;  // ||v||_inf
  SpaceTimeField v;   // u_g - u_{lambda g} / lambda
};

/// Throws InvalidArgument for lambda <= 0.
LinearizationGap linearization_gap(const ForwardSolver& solver, const Nonlinearity& nl, const SpaceTimeField& g,
                                   double lambda, const PicardOptions& opt = {});

/// T sum_k lambda^{b_k} ||a_k||_inf ||g||_inf^{b_k + 1}.
double linearization_bound(const TimeGrid& time, const Nonlinearity& nl, const SpaceTimeField& g, double lambda);

/// Discrete L^2(W_2 x (0,T)) norm of an observation block.
double observation_norm(const SpaceGrid& grid, const TimeGrid& time, const Eigen::MatrixXd& block);

struct ExponentFit {
  double exponent = 0.0;  // b = slope - 1
  double slope = 0.0;
  double noise_floor = 0.0;
  std::vector<double> lambdas;        // all probes, ascending
  std::vector<double> defect_norms;   // ||d_lambda|| per probe
  std::vector<double> used;           // probes entering the fit
};

/// Defects d_lambda = measured(lambda) - lambda * reference(1) for a linear reference.
std::vector<Eigen::MatrixXd> defects(const MeasurementSource& system, const DtNMeasurement& reference,
                                     const std::vector<double>& lambdas);

/// Slope of log ||d_lambda|| against log lambda over the probes above
/// 100 x noise floor where the norm still grows with lambda, taken between
/// the two smallest usable probes, where higher powers matter least. Throws
/// RecoveryError("no nonlinear signal") when fewer than two probes clear the
/// floor.
ExponentFit recover_exponent(const MeasurementSource& system, const DtNMeasurement& reference,
                             const std::vector<double>& lambdas, double noise_floor);
ExponentFit fit_exponent(const SpaceGrid& grid, const TimeGrid& time, const std::vector<double>& lambdas,
                         const std::vector<Eigen::MatrixXd>& defects, double noise_floor);

struct ExponentScan {
  std::vector<double> exponents;  // the `terms` smallest, increasing
  std::vector<double> roots;      // every fitted exponent, including the extra order
  std::vector<double> used;       // probes entering the fit
  Index model_order = 0;
  double residual = 0.0;          // relative least-squares residual of the recurrence
};

/// Several exponents at once from probes on a geometric grid with a constant
/// ratio rho. A defect that is a sum of M powers lambda^{b_k + 1} satisfies a
/// linear recurrence across consecutive probes whose characteristic roots are
/// rho^{b_k + 1}; the recurrence is fitted by least squares over all
/// observation entries. One order beyond `terms` absorbs the next power in
/// the expansion. Throws InvalidArgument when the probes are not geometric and
/// RecoveryError when too few probes clear 100 x noise floor.
ExponentScan scan_exponents(const SpaceGrid& grid, const TimeGrid& time, const std::vector<double>& lambdas,
                            const std::vector<Eigen::MatrixXd>& defects, std::size_t terms, double noise_floor);

/// Linear source-to-measurement map phi |-> -A_{W2,I} G(phi), assembled
/// densely, with a cached Tikhonov solver.
class SourceInversion {
 public:
  explicit SourceInversion(const ForwardSolver& solver);

  const Eigen::MatrixXd& matrix() const { return p_; }
  /// Observation block for an interior source block.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& source) const;
  /// argmin ||P phi - y||_W^2 + reg (tr N / n) ||phi||^2 with N = P^T W P.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& data, double reg) const;

  struct LCurvePoint {
    double reg = 0.0;
    double residual = 0.0;
    double solution = 0.0;
  };
  /// Chooses the corner of maximal curvature of (log residual, log solution norm).
  double select_regularization(const Eigen::MatrixXd& data, const std::vector<double>& regs,
                               std::vector<LCurvePoint>* curve = nullptr) const;

 private:
  const Eigen::LLT<Eigen::MatrixXd>& factor(double reg) const;

  const ForwardSolver& solver_;
  Eigen::MatrixXd p_;
  Eigen::VectorXd weight_;  // observation weights h^n w_j
  Eigen::MatrixXd normal_;
  double trace_scale_ = 0.0;
  mutable std::map<double, Eigen::LLT<Eigen::MatrixXd>> factors_;
};

struct RecoveryOptions {
  std::vector<double> stage_lambdas;  // one probe per term; empty: geometric between the extremes of `lambdas`
  std::vector<double> lambdas{1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8};  // probe schedule
  double reg_weight = -1.0;           // negative: L-curve selection on the first stage
  std::vector<double> reg_candidates{1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};
  Index sweeps = 4;
  Index inner = 2;
  double guard = 0.5;        // nodes with |u_g| below this are excluded from the division
  double guard_limit = 0.01; // RecoveryError above this excluded fraction
  PicardOptions picard{1e-14, 400, 3};
};

struct RecoveryResult {
  std::vector<double> exponents;
  std::vector<Eigen::MatrixXd> coefficients;  // interior x time per term
  std::vector<double> stage_lambdas;
  std::vector<double> stage_residuals;        // relative defect misfit after the final sweep
  std::vector<double> clipped_negative;       // fraction of negative entries clipped per term
  double reg_weight = 0.0;
  double guard_fraction = 0.0;                // over t > 0
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> unguarded;  // interior x time
  std::vector<ExponentFit> fits;  // leading-term slope fit
  ExponentScan scan;              // filled when the exponents were not given
};

/// Peels the terms in increasing exponent order. Stage k divides the
/// regularized source recovered from (d_{lambda_k} - predicted) / lambda_k^{b_k+1}
/// by |u_g|^{b_k} u_g; sweeps repeat all stages so each stage sees the
/// current estimate of every other term. `b` may be empty, in which case
/// `terms` exponents are recovered from the defects by scan_exponents.
/// `control` is the exterior probe g and `u_g` its linear solution.
RecoveryResult recover_coefficients(const ForwardSolver& solver, const MeasurementSource& system,
                                    const DtNMeasurement& reference, const SpaceTimeField& control,
                                    const SpaceTimeField& u_g, std::vector<double> b, std::size_t terms,
                                    const RecoveryOptions& opt);

/// Relative L^2 error of an estimate on the unguarded nodes.
double masked_relative_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth,
                             const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);

}  // namespace fracdiff
