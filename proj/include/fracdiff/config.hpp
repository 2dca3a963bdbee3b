#pragma once

#include "fracdiff/forward.hpp"
#include "fracdiff/geometry.hpp"
#include "fracdiff/inverse.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fracdiff {

/// One term a(x) |u|^b u. The coefficient is constant in time.
struct TermSpec {
  double exponent = 1.0;
  std::string kind = "constant";  // constant | gaussian-bump | tabulated
  double amplitude = 1.0;
  std::array<double, 2> center{0.0, 0.0};
  double width = 0.5;             // standard deviation of the bump
  std::string file;               // tabulated: CSV x[,y],value, resolved against the config directory
};

struct ExperimentConfig {
  std::string origin = "<defaults>";  // config path, for diagnostics

  GridSpec grid;
  double horizon = 1.0;
  Index steps = 64;
  double s = 0.5;

  std::vector<TermSpec> nonlinearity;  // the system simulated by forward, dtn and invert
  PicardOptions picard{1e-12, 200, 3};
  std::string solver = "picard";       // picard | imex | both

  double data_amplitude = 0.1;  // forward: g = amplitude * bump over the control window * sin^2(pi t / 2T)
  double source = 0.0;          // forward: constant interior source f

  double control_target = 1.0;
  double control_reg = 1e-10;
  std::vector<double> control_reg_sweep{1e-4, 1e-6, 1e-8, 1e-10};

  std::size_t terms = 0;        // 0: size of `nonlinearity`
  bool known_exponents = true;  // false: scan the exponents from the defects
  std::string measurements;     // recorded measurement CSV; empty: simulate
  RecoveryOptions recovery;

  Index samples = 10;           // random instances per verification check
  std::string output = "out";
  std::uint64_t seed = 1;
};

/// Throws ConfigError with "file:line:column: message" diagnostics.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& name = "<string>",
                              const std::string& base_dir = ".");

/// Commented YAML listing every key with its default value.
std::string default_config_text();
/// Canonical YAML of the resolved configuration.
std::string canonical_config(const ExperimentConfig& cfg);
/// Hash of the canonical form with the output directory left out.
std::string config_hash(const ExperimentConfig& cfg);

/// Validated grid, time grid and nonlinearity of a configuration.
SpaceGrid make_grid(const ExperimentConfig& cfg);
TimeGrid make_time(const ExperimentConfig& cfg);
Nonlinearity make_nonlinearity(const ExperimentConfig& cfg, const SpaceGrid& grid, const TimeGrid& time);
/// Coefficient block (interior x time) of one term.
Eigen::MatrixXd coefficient_block(const TermSpec& term, const SpaceGrid& grid, const TimeGrid& time);
/// Smooth compactly supported probe over the control window, scaled to `amplitude`.
SpaceTimeField probe_data(const SpaceGrid& grid, const TimeGrid& time, double amplitude);

}  // namespace fracdiff
