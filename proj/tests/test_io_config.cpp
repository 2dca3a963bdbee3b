#include "doctest.h"

#include "fracdiff/config.hpp"
#include "fracdiff/errors.hpp"
#include "fracdiff/experiment.hpp"
#include "fracdiff/io.hpp"
#include "support.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fracdiff;
using namespace fracdiff::testing;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fracdiff_test_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "bad.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a("foobar")) == "85944171f73967e8");
}

TEST_CASE("shortest round-trip formatting") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("grid hash depends on the layout only") {
  const SpaceGrid a(desk_spec());
  const SpaceGrid b(desk_spec());
  const SpaceGrid c(desk_spec(1.0 / 16));
  CHECK(grid_hash(a) == grid_hash(b));
  CHECK(grid_hash(a) != grid_hash(c));
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(2, 3);
  const std::string h = matrix_hash(m);
  m(1, 2) = 1.0 + 1e-16 * 2;
  CHECK(matrix_hash(m) != h);
  CHECK(matrix_hash(Eigen::MatrixXd::Ones(3, 2)) != h);
}

TEST_CASE("documented defaults parse to the built-in defaults") {
  const ExperimentConfig from_text = parse_config(default_config_text(), "defaults.yaml");
  const ExperimentConfig built_in = parse_config("", "<empty>");
  CHECK(canonical_config(from_text) == canonical_config(built_in));
  CHECK(config_hash(from_text) == config_hash(built_in));
  CHECK(built_in.grid.dim == 1);
  CHECK(built_in.steps == 64);
  CHECK(built_in.s == 0.5);
  // the canonical form is a fixed point
  CHECK(canonical_config(parse_config(canonical_config(built_in))) == canonical_config(built_in));
}

TEST_CASE("configuration errors carry file, line and column") {
  const std::string order = config_error("operator:\n  s: 1.5\n");
  CHECK(order.rfind("bad.yaml:2:", 0) == 0);
  CHECK(order.find("(0, 1)") != std::string::npos);

  const std::string overlap = config_error(
      "grid:\n"
      "  control: {balls: [{lo: 1.05, hi: 2.5}]}\n"
      "  observation: {balls: [{lo: 2.0, hi: 3.5}]}\n");
  CHECK(overlap.rfind("bad.yaml:", 0) == 0);
  CHECK(overlap.find("W1") != std::string::npos);
  CHECK(overlap.find("W2") != std::string::npos);

  const std::string unknown = config_error("time:\n  T: 1\n  stepz: 4\n");
  CHECK(unknown.rfind("bad.yaml:3:", 0) == 0);
  CHECK(unknown.find("stepz") != std::string::npos);

  CHECK_FALSE(config_error("time: {steps: -3}\n").empty());
  CHECK_FALSE(config_error("nonlinearity:\n  - {b: 2}\n  - {b: 1}\n").empty());
  CHECK_FALSE(config_error("grid: [1, 2\n").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/fracdiff.yaml"), ConfigError);
}

TEST_CASE("tabulated coefficients interpolate linearly in one dimension") {
  const auto dir = scratch("tabulated");
  {
    std::ofstream(dir / "coef.csv") << "x,value\n-1,0\n1,2\n";
    std::ofstream(dir / "cfg.yaml") << "nonlinearity:\n  - {b: 1, kind: tabulated, file: coef.csv}\n";
  }
  const ExperimentConfig cfg = load_config((dir / "cfg.yaml").string());
  const SpaceGrid grid = make_grid(cfg);
  const TimeGrid time = make_time(cfg);
  const Eigen::MatrixXd a = coefficient_block(cfg.nonlinearity.front(), grid, time);
  const auto& inner = grid.indices(Region::interior);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    CHECK(a(static_cast<Index>(i), 5) == doctest::Approx(grid.coord(inner[i])[0] + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("probe data is supported in the control window and starts at zero") {
  const SpaceGrid grid(desk_spec());
  const TimeGrid time(1.0, 16);
  const SpaceTimeField g = probe_data(grid, time, 0.7);
  CHECK(g.support() == Region::control);
  CHECK(g.values().col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.values().maxCoeff() == doctest::Approx(0.7).epsilon(0.05));
  CHECK(g.values().minCoeff() >= 0.0);
}

TEST_CASE("artifact writer emits headers and a manifest") {
  const auto dir = scratch("writer");
  ArtifactWriter out(dir.string(), "abc");
  out.csv("table", {"a", "b"}, std::vector<std::vector<double>>{{1.0, 0.1}, {2.0, 0.2}});
  out.finish("unit", {{"ok", true}});
  CHECK(slurp(dir / "table.csv") == "a,b\n1,0.1\n2,0.2\n");
  const auto header = nlohmann::json::parse(slurp(dir / "table.json"));
  CHECK(header["config_hash"] == "abc");
  CHECK(header["rows"] == 2);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["command"] == "unit");
  CHECK(manifest["files"].size() == 2);
}

TEST_CASE("commands map failures to exit codes") {
  const auto dir = scratch("exit");
  RunOptions opt;
  opt.quiet = true;
  opt.out_dir = (dir / "out").string();
  {
    std::ofstream(dir / "bad.yaml") << "operator:\n  s: 1.5\n";
    std::ofstream(dir / "huge.yaml") << "nonlinearity:\n  - {b: 2, amplitude: 1}\nforward:\n  amplitude: 60\n";
  }
  CHECK(run_command("verify", (dir / "bad.yaml").string(), opt) == kConfigError);
  CHECK(run_command("verify", (dir / "absent.yaml").string(), opt) == kConfigError);
  CHECK(run_command("frobnicate", "", opt) == kConfigError);
  CHECK(run_command("forward", (dir / "huge.yaml").string(), opt) == kSolverFailure);
}

TEST_CASE("forward runs are byte-for-byte reproducible") {
  const auto dir = scratch("determinism");
  RunOptions opt;
  opt.quiet = true;
  opt.out_dir = (dir / "a").string();
  REQUIRE(run_command("forward", "", opt) == kSuccess);
  opt.out_dir = (dir / "b").string();
  REQUIRE(run_command("forward", "", opt) == kSuccess);
  // config.yaml differs in output.dir only, which the config hash leaves out
  for (const char* file : {"solution_picard.csv", "solution_picard.json", "grid.csv", "manifest.json"}) {
    CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
  }
  CHECK_FALSE(slurp(dir / "a" / "solution_picard.csv").empty());
}
