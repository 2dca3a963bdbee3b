#pragma once

#include "fracdiff/config.hpp"
#include "fracdiff/forward.hpp"
#include "fracdiff/fracop.hpp"
#include "fracdiff/io.hpp"
#include "fracdiff/semigroup.hpp"

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fracdiff {

enum ExitCode : int { kSuccess = 0, kCheckViolation = 1, kConfigError = 2, kSolverFailure = 3 };

struct RunOptions {
  std::string out_dir;                 // empty: output.dir of the config
  std::optional<std::uint64_t> seed;   // overrides the config seed
  std::string solver;                  // empty: solver.method of the config
  bool quiet = false;
};

/// Grid, operator, semigroup and forward solver of one configuration.
class Problem {
 public:
  explicit Problem(const ExperimentConfig& cfg);
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;

  const SpaceGrid& grid() const { return grid_; }
  const TimeGrid& time() const { return time_; }
  const FracOperator& op() const { return *op_; }
  const RestrictedSemigroup& semigroup() const { return *sg_; }
  const ForwardSolver& solver() const { return *solver_; }

 private:
  SpaceGrid grid_;
  TimeGrid time_;
  std::unique_ptr<FracOperator> op_;
  std::unique_ptr<RestrictedSemigroup> sg_;
  std::unique_ptr<ForwardSolver> solver_;
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool enforced = true;  // false: reported only, never fails the suite
  std::string detail;
};

/// Random smooth field on interior nodes: a sine series across the domain
/// ball with coefficients in [-1, 1] (or [0, 1] when `sign_changing` is false)
/// and decaying like 1/m, vanishing on the boundary.
Eigen::VectorXd smooth_random_field(const SpaceGrid& grid, std::mt19937_64& rng, bool sign_changing = true);

/// Invariant suite at the configured scale: operator structure, semigroup
/// laws, decay and comparison bounds, Duhamel oracle, forward bounds and
/// uniqueness, linearization. Decay tables go to `out` when given.
std::vector<CheckResult> verify_suite(const ExperimentConfig& cfg, const Problem& problem, ArtifactWriter* out);

int cmd_verify(ExperimentConfig cfg, const RunOptions& opt);
int cmd_forward(ExperimentConfig cfg, const RunOptions& opt);
int cmd_dtn(ExperimentConfig cfg, const RunOptions& opt);
int cmd_control(ExperimentConfig cfg, const RunOptions& opt);
int cmd_invert(ExperimentConfig cfg, const RunOptions& opt);

/// Loads the config (defaults when `config_path` is empty), runs `command` and
/// maps errors to exit codes, printing them to stderr.
int run_command(const std::string& command, const std::string& config_path, const RunOptions& opt);

}  // namespace fracdiff
