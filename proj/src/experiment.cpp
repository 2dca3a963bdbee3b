#include "fracdiff/experiment.hpp"

#include "fracdiff/control.hpp"
#include "fracdiff/errors.hpp"
#include "fracdiff/heat_kernel.hpp"
#include "fracdiff/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace fracdiff {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

class Log {
 public:
  explicit Log(bool quiet) : quiet_(quiet) {}
  template <class... Args>
  void operator()(const Args&... args) const {
    if (quiet_) return;
    (std::cout << ... << args) << '\n';
  }

 private:
  bool quiet_;
};

void apply_options(ExperimentConfig& cfg, const RunOptions& opt) {
  if (!opt.out_dir.empty()) cfg.output = opt.out_dir;
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.solver.empty()) {
    if (opt.solver != "picard" && opt.solver != "imex" && opt.solver != "both") {
      throw ConfigError("--solver must be picard, imex or both");
    }
    cfg.solver = opt.solver;
  }
}

ArtifactWriter open_output(const ExperimentConfig& cfg) {
  ArtifactWriter out(cfg.output, config_hash(cfg));
  std::ofstream os(fs::path(cfg.output) / "config.yaml");
  os << canonical_config(cfg) << '\n';
  out.note("config.yaml");
  return out;
}

Eigen::VectorXd extend(const SpaceGrid& grid, const Eigen::VectorXd& interior) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(grid.size());
  const auto& inner = grid.indices(Region::interior);
  for (std::size_t i = 0; i < inner.size(); ++i) full(inner[i]) = interior(static_cast<Index>(i));
  return full;
}

Eigen::VectorXd restrict(const SpaceGrid& grid, const Eigen::VectorXd& full) {
  const auto& inner = grid.indices(Region::interior);
  Eigen::VectorXd out(static_cast<Index>(inner.size()));
  for (std::size_t i = 0; i < inner.size(); ++i) out(static_cast<Index>(i)) = full(inner[i]);
  return out;
}

std::vector<double> log_times(double lo, double hi, int count) {
  std::vector<double> t;
  for (int k = 0; k < count; ++k) t.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1)));
  return t;
}

SpaceTimeField interior_source(const SpaceGrid& grid, const TimeGrid& time, double value) {
  const Eigen::MatrixXd block = Eigen::MatrixXd::Constant(grid.count(Region::interior), time.size(), value);
  return SpaceTimeField::from_block(grid, time, Region::interior, block);
}

nlohmann::json report_json(const SolveReport& r) {
  return {{"method", r.method},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"ratios", r.ratios},
          {"ball_radius", r.ball_radius},
          {"solution_x_norm", r.solution_x_norm},
          {"exponents", {{"q", r.exponents.q}, {"p", r.exponents.p}, {"r", r.exponents.r}}}};
}

RungeControl synthesize(const ExperimentConfig& cfg, const Problem& pb) {
  const Eigen::MatrixXd target =
      Eigen::MatrixXd::Constant(pb.grid().count(Region::interior), pb.time().size(), cfg.control_target);
  return RungeSynthesizer(pb.solver()).synthesize(target, cfg.control_reg);
}

int finish(ArtifactWriter& out, const std::string& command, nlohmann::json summary, int code) {
  summary["exit_code"] = code;
  out.finish(command, std::move(summary));
  return code;
}

}  // namespace

Problem::Problem(const ExperimentConfig& cfg) : grid_(make_grid(cfg)), time_(make_time(cfg)) {
  op_ = std::make_unique<FracOperator>(assemble_frac_laplacian(grid_, cfg.s));
  sg_ = std::make_unique<RestrictedSemigroup>(*op_);
  solver_ = std::make_unique<ForwardSolver>(*op_, *sg_, time_);
}

Eigen::VectorXd smooth_random_field(const SpaceGrid& grid, std::mt19937_64& rng, bool sign_changing) {
  std::uniform_real_distribution<double> coef(sign_changing ? -1.0 : 0.0, 1.0);
  double c[6];
  for (double& v : c) v = coef(rng);
  const Ball& omega = grid.spec().omega;
  const auto& inner = grid.indices(Region::interior);
  Eigen::VectorXd f(static_cast<Index>(inner.size()));
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const auto& x = grid.coord(inner[i]);
    const double xi = (x[0] - omega.center[0]) / omega.radius;
    double v = 0.0;
    for (int m = 1; m <= 6; ++m) v += c[m - 1] * std::sin(m * kPi * (xi + 1.0) / 2.0) / m;
    if (grid.dim() == 2) {
      const double eta = (x[1] - omega.center[1]) / omega.radius;
      v *= std::max(0.0, 1.0 - xi * xi - eta * eta);
    }
    f(static_cast<Index>(i)) = v;
  }
  return f;
}

std::vector<CheckResult> verify_suite(const ExperimentConfig& cfg, const Problem& pb, ArtifactWriter* out) {
  std::vector<CheckResult> res;
  auto add = [&](std::string name, double value, double threshold, bool pass, std::string detail = "",
                 bool enforced = true) {
    res.push_back(CheckResult{std::move(name), value, threshold, pass, enforced, std::move(detail)});
  };
  const SpaceGrid& grid = pb.grid();
  const TimeGrid& time = pb.time();
  const FracOperator& op = pb.op();
  const RestrictedSemigroup& sg = pb.semigroup();
  const ForwardSolver& solver = pb.solver();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::VectorXd> samples;
  for (Index k = 0; k < cfg.samples; ++k) samples.push_back(smooth_random_field(grid, rng));

  // operator structure
  const Eigen::MatrixXd& a = op.matrix();
  const double amax = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff() / amax;
  add("operator.symmetry", asym, 1e-12, asym <= 1e-12);
  Index bad_sign = 0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) bad_sign += (i == j) ? (a(i, j) <= 0.0) : (a(i, j) > 0.0);
  }
  add("operator.sign_pattern", static_cast<double>(bad_sign), 0.0, bad_sign == 0);
  const double row = (a.rowwise().sum() - op.tail()).cwiseAbs().maxCoeff() / a.diagonal().maxCoeff();
  add("operator.row_sum", row, 1e-10, row <= 1e-10, "rows sum to the beyond-box tail");
  add("operator.interior_spd", sg.eigenvalues()(0), 0.0, sg.eigenvalues()(0) > 0.0, "smallest eigenvalue of A_II");
  add("semigroup.eigen_residual", sg.eigen_residual(), 1e-8, sg.eigen_residual() <= 1e-8);

  // semigroup laws
  std::uniform_real_distribution<double> split(0.0, 0.5);
  double id_err = 0.0, comp_err = 0.0, spec_ratio = 0.0;
  const double mu1 = sg.eigenvalues()(0);
  for (const auto& f : samples) {
    const double fn = f.cwiseAbs().maxCoeff();
    id_err = std::max(id_err, (sg.apply(0.0, f) - f).cwiseAbs().maxCoeff() / fn);
    const double t1 = split(rng), t2 = split(rng);
    comp_err = std::max(comp_err, (sg.apply(t1 + t2, f) - sg.apply(t1, sg.apply(t2, f))).cwiseAbs().maxCoeff() / fn);
    const double tl = 10.0 / mu1;
    spec_ratio = std::max(spec_ratio, sg.apply(tl, f).norm() / (std::exp(-mu1 * tl) * f.norm()));
  }
  add("semigroup.identity", id_err, 1e-12, id_err <= 1e-12);
  add("semigroup.composition", comp_err, 1e-10, comp_err <= 1e-10);
  add("semigroup.spectral_bound", spec_ratio, 1.0 + 1e-10, spec_ratio <= 1.0 + 1e-10,
      "||S(10/mu_1) f|| / (e^{-10} ||f||)");

  // heat kernel
  const HeatKernel& kernel = FreeSemigroup(grid, cfg.s).kernel();
  double kmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    for (double t : {0.01, 0.1, 1.0}) kmin = std::min(kmin, kernel(0.2 * i, t));
  }
  add("kernel.positivity", kmin, 0.0, kmin > 0.0, "minimum over a 20 x 3 (r, t) lattice");
  const double mass = std::abs(kernel.mass(1.0) - 1.0);
  add("kernel.mass", mass, 1e-6, mass <= 1e-6);

  // decay bounds on S_Omega
  const std::vector<double> times = log_times(0.01, 1.0, 9);
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& [r, p] : std::vector<std::pair<double, double>>{{2.0, 2.0}, {2.0, inf}}) {
    std::vector<double> ratios;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const DecayReport rep = check_decay_restricted(sg, samples[k], r, p, times);
      for (const auto& row : rep.rows) ratios.push_back(row.ratio);
      if (k == 0 && out) write_decay(*out, std::isinf(p) ? "decay_r2_pinf" : "decay_r2_p2", rep);
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double worst = sorted.back() / median;
    add(std::string("decay.") + (std::isinf(p) ? "r2_pinf" : "r2_p2"), worst, 3.0, worst <= 3.0,
        "largest ratio over the median ratio");
  }

  // comparison chain
  const FreeSemigroup free(grid, cfg.s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> box(a);
  double first = -inf, second = -inf, discrete = -inf;
  std::vector<std::vector<double>> comp_rows;
  for (double t : {0.05, 0.2, 1.0}) {
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const Eigen::VectorXd& f = samples[k];
      const double scale = f.cwiseAbs().maxCoeff();
      const ComparisonReport rep = check_comparison(sg, free, f, t, 1e-8);
      const Eigen::VectorXd mid = sg.apply(t, f.cwiseAbs());
      const Eigen::VectorXd boxed = restrict(
          grid, box.eigenvectors() *
                    ((-t * box.eigenvalues()).array().exp() * (box.eigenvectors().transpose() * extend(grid, f.cwiseAbs())).array())
                        .matrix());
      const double dgap = (mid - boxed).maxCoeff() / scale;
      first = std::max(first, rep.first_gap / scale);
      second = std::max(second, rep.second_gap / scale);
      discrete = std::max(discrete, dgap);
      comp_rows.push_back({t, static_cast<double>(k), rep.first_gap / scale, dgap, rep.second_gap / scale});
    }
  }
  if (out) out->csv("comparison", {"t", "sample", "first_gap", "box_gap", "free_gap"}, comp_rows);
  add("comparison.first", first, 1e-8, first <= 1e-8, "|S_Omega f| - S_Omega|f|, relative to max|f|");
  add("comparison.box", discrete, 1e-8, discrete <= 1e-8,
      "S_Omega|f| - exp(-tA)|f| with the full-box operator, relative to max|f|");
  add("comparison.free", second, 1e-6, second <= 1e-6,
      "S_Omega|f| - S|f| with the sampled continuum kernel; discretization-limited", false);

  // Duhamel oracle
  {
    const Eigen::VectorXd v1 = sg.eigenvectors().col(0);
    const Eigen::MatrixXd f = v1.replicate(1, time.size());
    const Eigen::MatrixXd gf = sg.duhamel(time, f);
    double err = 0.0;
    for (Index j = 0; j < time.size(); ++j) {
      const Eigen::VectorXd exact = (1.0 - std::exp(-mu1 * time.at(j))) / mu1 * v1;
      err = std::max(err, (gf.col(j) - exact).cwiseAbs().maxCoeff() / (v1.cwiseAbs().maxCoeff() / mu1));
    }
    add("duhamel.eigenvector", err, 1e-8, err <= 1e-8);
    const Eigen::MatrixXd g1 = sg.duhamel(time, Eigen::MatrixXd::Ones(f.rows(), f.cols()));
    double over = -g1.minCoeff();
    for (Index j = 0; j < time.size(); ++j) over = std::max(over, g1.col(j).maxCoeff() - time.at(j));
    add("duhamel.unit_source", over, 1e-12, over <= 1e-12, "violation of 0 <= G1(t) <= t");
  }

  // forward problem
  const Nonlinearity nl = make_nonlinearity(cfg, grid, time);
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  double linf_excess = -inf;
  double uniq = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const SpaceTimeField g = probe_data(grid, time, cfg.data_amplitude * amp(rng));
    Eigen::MatrixXd fb(grid.count(Region::interior), time.size());
    for (Index j = 0; j < time.size(); ++j) fb.col(j) = 0.1 * samples[k] * time.at(j) / time.horizon();
    const SpaceTimeField f = SpaceTimeField::from_block(grid, time, Region::interior, fb);
    const SolveReport rep = solver.solve(nl, g, cfg.picard, &f);
    const LinfReport lr = check_linf_bound(grid, time, rep.u, &f, g, 1e-8);
    linf_excess = std::max(linf_excess, lr.value - lr.bound);
    if (k < 3) uniq = std::max(uniq, check_uniqueness(solver, nl, g, cfg.picard).max_distance);
  }
  add("forward.linf_bound", linf_excess, 0.0, linf_excess <= 0.0, "||u||_inf - (T||f||_inf + ||g||_inf + 1e-8)");
  add("forward.uniqueness", uniq, 10.0 * cfg.picard.tol, uniq <= 10.0 * cfg.picard.tol,
      "largest relative distance between Picard starts");
  const SpaceTimeField g = probe_data(grid, time, cfg.data_amplitude);
  {
    const SolveReport rep = solver.solve(nl, g, cfg.picard);
    Index first_half = -1;
    for (std::size_t i = 0; i < rep.ratios.size(); ++i) {
      if (rep.ratios[i] < 0.5) {
        first_half = static_cast<Index>(i) + 2;
        break;
      }
    }
    const bool ok = rep.iterations <= 5 || (first_half > 0 && first_half <= 5);
    add("forward.contraction", first_half > 0 ? static_cast<double>(first_half) : static_cast<double>(rep.iterations),
        5.0, ok, "iteration at which the contraction ratio first drops below 1/2");
  }

  // linearization
  {
    std::vector<double> lambdas = cfg.recovery.lambdas;
    std::sort(lambdas.rbegin(), lambdas.rend());
    double prev = inf;
    bool monotone = true;
    double excess = -inf;
    std::vector<std::vector<double>> rows;
    for (double lambda : lambdas) {
      const LinearizationGap gap = linearization_gap(solver, nl, g, lambda, cfg.picard);
      const double bound = linearization_bound(time, nl, g, lambda);
      if (!nl.empty() && !(gap.linf < prev)) monotone = false;
      prev = gap.linf;
      excess = std::max(excess, gap.linf - bound);
      rows.push_back({lambda, gap.linf, bound});
    }
    if (out) out->csv("linearization", {"lambda", "gap", "bound"}, rows);
    add("linearization.monotone", monotone ? 1.0 : 0.0, 1.0, monotone, "gap decreases with lambda");
    add("linearization.bound", excess, 1e-6, excess <= 1e-6, "largest gap minus its bound");
  }
  return res;
}

int cmd_verify(ExperimentConfig cfg, const RunOptions& opt) {
  apply_options(cfg, opt);
  const Log log(opt.quiet);
  ArtifactWriter out = open_output(cfg);
  const Problem pb(cfg);
  write_grid(out, "grid", pb.grid(), pb.time());
  const std::vector<CheckResult> checks = verify_suite(cfg, pb, &out);
  std::vector<std::vector<std::string>> rows;
  Index failed = 0;
  for (const auto& c : checks) {
    const std::string status = c.pass ? "pass" : (c.enforced ? "FAIL" : "info");
    if (!c.pass && c.enforced) ++failed;
    rows.push_back({c.name, format_double(c.value), format_double(c.threshold), status, c.detail});
    log(status, "  ", c.name, " = ", c.value, " (threshold ", c.threshold, ")");
  }
  out.csv("checks", {"check", "value", "threshold", "status", "detail"}, rows);
  log(failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed");
  return finish(out, "verify", {{"checks", checks.size()}, {"failed", failed}},
                failed == 0 ? kSuccess : kCheckViolation);
}

int cmd_forward(ExperimentConfig cfg, const RunOptions& opt) {
  apply_options(cfg, opt);
  const Log log(opt.quiet);
  ArtifactWriter out = open_output(cfg);
  const Problem pb(cfg);
  const SpaceGrid& grid = pb.grid();
  const TimeGrid& time = pb.time();
  write_grid(out, "grid", grid, time);
  const Nonlinearity nl = make_nonlinearity(cfg, grid, time);
  const SpaceTimeField g = probe_data(grid, time, cfg.data_amplitude);
  const SpaceTimeField f = interior_source(grid, time, cfg.source);
  const SpaceTimeField* fp = cfg.source != 0.0 ? &f : nullptr;
  nlohmann::json summary{{"solver", cfg.solver}};
  SpaceTimeField picard, imex;
  if (cfg.solver != "imex") {
    const SolveReport rep = pb.solver().solve(nl, g, cfg.picard, fp);
    picard = rep.u;
    nlohmann::json j = report_json(rep);
    j["pde_residual"] = pb.solver().pde_residual(nl, rep.u, fp);
    out.json("report_picard", j);
    write_field(out, "solution_picard", grid, time, rep.u, Region::everywhere);
    log("picard: ", rep.iterations, " iterations, residual ", rep.residual);
    summary["picard_iterations"] = rep.iterations;
  }
  if (cfg.solver != "picard") {
    imex = imex_oracle(pb.op(), time, nl, g, fp);
    out.json("report_imex", {{"method", "imex"}, {"pde_residual", pb.solver().pde_residual(nl, imex, fp)}});
    write_field(out, "solution_imex", grid, time, imex, Region::everywhere);
    log("imex: done");
  }
  if (cfg.solver == "both") {
    const double d = l2_spacetime_norm(grid, time, picard - imex, Region::interior) /
                     l2_spacetime_norm(grid, time, picard, Region::interior);
    out.json("comparison", {{"relative_l2_distance", d}});
    log("picard vs imex relative L2 distance: ", d);
    summary["picard_imex_distance"] = d;
  }
  return finish(out, "forward", summary, kSuccess);
}

int cmd_control(ExperimentConfig cfg, const RunOptions& opt) {
  apply_options(cfg, opt);
  const Log log(opt.quiet);
  ArtifactWriter out = open_output(cfg);
  const Problem pb(cfg);
  const SpaceGrid& grid = pb.grid();
  const TimeGrid& time = pb.time();
  const RungeSynthesizer rs(pb.solver());
  const Eigen::MatrixXd target =
      Eigen::MatrixXd::Constant(grid.count(Region::interior), time.size(), cfg.control_target);
  std::vector<std::vector<double>> rows;
  for (double reg : cfg.control_reg_sweep) {
    const RungeControl c = rs.synthesize(target, reg);
    rows.push_back({reg, c.delta, c.condition_estimate, c.g.values().cwiseAbs().maxCoeff()});
    log("reg ", reg, ": delta ", c.delta);
  }
  out.csv("control_sweep", {"reg", "delta", "condition", "g_max"}, rows);
  const RungeControl c = rs.synthesize(target, cfg.control_reg);
  write_field(out, "control", grid, time, c.g, Region::control);
  write_field(out, "state", grid, time, c.u, Region::interior);
  out.json("control_report", {{"delta", c.delta},
                              {"reg", c.reg_weight},
                              {"condition_estimate", c.condition_estimate},
                              {"target", cfg.control_target},
                              {"control_hash", matrix_hash(c.g.values())}});
  log("delta ", c.delta, " at reg ", c.reg_weight);
  return finish(out, "control", {{"delta", c.delta}}, kSuccess);
}

int cmd_dtn(ExperimentConfig cfg, const RunOptions& opt) {
  apply_options(cfg, opt);
  const Log log(opt.quiet);
  ArtifactWriter out = open_output(cfg);
  const Problem pb(cfg);
  const SpaceGrid& grid = pb.grid();
  const TimeGrid& time = pb.time();
  const RungeControl c = synthesize(cfg, pb);
  const Nonlinearity nl = make_nonlinearity(cfg, grid, time);
  const SimulatedSource source(pb.solver(), nl, c.g, cfg.recovery.picard);
  std::vector<double> lambdas = cfg.recovery.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<Eigen::MatrixXd> values;
  for (double lambda : lambdas) {
    values.push_back(source.measure(lambda).values);
    log("measured lambda = ", lambda);
  }
  write_measurements((fs::path(out.directory()) / "measurements.csv").string(), grid, lambdas, values,
                     matrix_hash(c.g.values()), out.config_hash());
  out.note("measurements.csv");
  out.note("measurements.json");
  write_field(out, "control", grid, time, c.g, Region::control);
  return finish(out, "dtn", {{"lambdas", lambdas}, {"control_delta", c.delta}}, kSuccess);
}

int cmd_invert(ExperimentConfig cfg, const RunOptions& opt) {
  apply_options(cfg, opt);
  const Log log(opt.quiet);
  ArtifactWriter out = open_output(cfg);
  const Problem pb(cfg);
  const SpaceGrid& grid = pb.grid();
  const TimeGrid& time = pb.time();
  const RungeControl c = synthesize(cfg, pb);
  log("control: delta ", c.delta);
  const Nonlinearity truth = make_nonlinearity(cfg, grid, time);
  const std::size_t terms = cfg.terms ? cfg.terms : truth.size();
  std::unique_ptr<MeasurementSource> system;
  if (!cfg.measurements.empty()) {
    auto rec = std::make_unique<RecordedSource>(cfg.measurements, grid, time);
    if (rec->grid_hash() != grid_hash(grid)) throw ConfigError(cfg.measurements + ": recorded on a different grid");
    if (rec->control_hash() != matrix_hash(c.g.values())) {
      throw ConfigError(cfg.measurements + ": recorded with a different control");
    }
    system = std::move(rec);
  } else {
    system = std::make_unique<SimulatedSource>(pb.solver(), truth, c.g, cfg.recovery.picard);
  }
  const DtNMeasurement reference = dtn(pb.solver(), Nonlinearity{}, c.g, 1.0, cfg.recovery.picard);
  std::vector<double> b;
  if (cfg.known_exponents) b = truth.exponents();
  const RecoveryResult res = recover_coefficients(pb.solver(), *system, reference, c.g, c.u, b, terms, cfg.recovery);

  const auto& inner = grid.indices(Region::interior);
  std::vector<std::string> cols{"node", "step", "t"};
  for (std::size_t k = 0; k < terms; ++k) cols.push_back("a" + std::to_string(k + 1));
  cols.emplace_back("unguarded");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    for (Index j = 0; j < time.size(); ++j) {
      std::vector<double> row{static_cast<double>(inner[i]), static_cast<double>(j), time.at(j)};
      for (const auto& a : res.coefficients) row.push_back(a(static_cast<Index>(i), j));
      row.push_back(res.unguarded(static_cast<Index>(i), j) ? 1.0 : 0.0);
      rows.push_back(std::move(row));
    }
  }
  out.csv("coefficients", cols, rows);

  nlohmann::json j{{"exponents", res.exponents},
                   {"stage_lambdas", res.stage_lambdas},
                   {"stage_residuals", res.stage_residuals},
                   {"clipped_negative", res.clipped_negative},
                   {"reg_weight", res.reg_weight},
                   {"guard_fraction", res.guard_fraction},
                   {"control_delta", c.delta}};
  for (const auto& f : res.fits) {
    j["slope_fit"] = {{"exponent", f.exponent},
                      {"lambdas", f.lambdas},
                      {"defect_norms", f.defect_norms},
                      {"used", f.used},
                      {"noise_floor", f.noise_floor}};
  }
  if (!cfg.known_exponents) {
    j["scan"] = {{"roots", res.scan.roots},
                 {"model_order", res.scan.model_order},
                 {"residual", res.scan.residual},
                 {"used", res.scan.used}};
  }
  nlohmann::json summary{{"exponents", res.exponents}};
  if (cfg.measurements.empty() && truth.size() == terms) {
    std::vector<double> coef_err, exp_err;
    for (std::size_t k = 0; k < terms; ++k) {
      coef_err.push_back(masked_relative_error(res.coefficients[k], truth.terms()[k].coefficient, res.unguarded));
      exp_err.push_back(std::abs(res.exponents[k] - truth.terms()[k].exponent));
      log("term ", k + 1, ": b = ", res.exponents[k], ", relative L2 error ", coef_err.back());
    }
    j["truth"] = {{"coefficient_error", coef_err}, {"exponent_error", exp_err}};
    summary["coefficient_error"] = coef_err;
  } else {
    for (std::size_t k = 0; k < terms; ++k) log("term ", k + 1, ": b = ", res.exponents[k]);
  }
  out.json("recovery", j);
  return finish(out, "invert", summary, kSuccess);
}

int run_command(const std::string& command, const std::string& config_path, const RunOptions& opt) {
  try {
    const ExperimentConfig cfg = config_path.empty() ? parse_config("", "<defaults>") : load_config(config_path);
    if (command == "verify") return cmd_verify(cfg, opt);
    if (command == "forward") return cmd_forward(cfg, opt);
    if (command == "dtn") return cmd_dtn(cfg, opt);
    if (command == "control") return cmd_control(cfg, opt);
    if (command == "invert") return cmd_invert(cfg, opt);
    std::cerr << "error: unknown command '" << command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
}

}  // namespace fracdiff
