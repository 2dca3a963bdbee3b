#include "fracdiff/config.hpp"

#include "fracdiff/errors.hpp"
#include "fracdiff/io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace fracdiff {

namespace fs = std::filesystem;

namespace {

class Reader {
 public:
  Reader(std::string name, std::string base) : name_(std::move(name)), base_(std::move(base)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    std::ostringstream os;
    os << name_;
    if (node.IsDefined() && node.Mark().line >= 0) os << ':' << node.Mark().line + 1 << ':' << node.Mark().column + 1;
    os << ": " << message;
    throw ConfigError(os.str());
  }

  void keys(const YAML::Node& map, const std::string& context, std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, "'" + context + "' must be a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        fail(kv.first, "unknown key '" + key + "' in '" + context + "'");
      }
    }
  }

  double number(const YAML::Node& node, const std::string& key) const {
    try {
      const double v = node.as<double>();
      if (!std::isfinite(v)) fail(node, "'" + key + "' must be finite");
      return v;
    } catch (const YAML::Exception&) {
      fail(node, "'" + key + "' must be a number");
    }
  }

  Index integer(const YAML::Node& node, const std::string& key) const {
    try {
      return node.as<Index>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + key + "' must be an integer");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& key) const {
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + key + "' must be true or false");
    }
  }

  std::string text(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, "'" + key + "' must be a string");
    return node.as<std::string>();
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& key) const {
    if (!node.IsSequence()) fail(node, "'" + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(number(item, key));
    return out;
  }

  std::string path(const YAML::Node& node, const std::string& key) const {
    const fs::path p(text(node, key));
    if (p.empty()) return {};
    const fs::path full = p.is_absolute() ? p : fs::path(base_) / p;
    return full.lexically_normal().string();
  }

  std::array<double, 2> point(const YAML::Node& node, const std::string& key) const {
    if (node.IsScalar()) return {number(node, key), 0.0};
    const std::vector<double> v = numbers(node, key);
    if (v.empty() || v.size() > 2) fail(node, "'" + key + "' must have one or two coordinates");
    return {v[0], v.size() > 1 ? v[1] : 0.0};
  }

  Ball ball(const YAML::Node& node, const std::string& context) const {
    keys(node, context, {"lo", "hi", "center", "radius"});
    if (node["lo"] || node["hi"]) {
      if (!node["lo"] || !node["hi"] || node["center"] || node["radius"]) {
        fail(node, "'" + context + "' needs either lo and hi or center and radius");
      }
      const double lo = number(node["lo"], "lo");
      const double hi = number(node["hi"], "hi");
      if (!(hi > lo)) fail(node, "'" + context + "' needs hi > lo");
      return Ball::interval(lo, hi);
    }
    if (!node["center"] || !node["radius"]) fail(node, "'" + context + "' needs either lo and hi or center and radius");
    return Ball{point(node["center"], "center"), number(node["radius"], "radius")};
  }

  WindowSpec window(const YAML::Node& node, const std::string& context, const WindowSpec& fallback) const {
    keys(node, context, {"name", "balls"});
    WindowSpec w = fallback;
    if (node["name"]) w.name = text(node["name"], "name");
    if (node["balls"]) {
      if (!node["balls"].IsSequence()) fail(node["balls"], "'balls' must be a list");
      w.parts.clear();
      for (const auto& b : node["balls"]) w.parts.push_back(ball(b, context + ".balls"));
    }
    return w;
  }

 private:
  std::string name_;
  std::string base_;
};

GridSpec default_grid() {
  GridSpec g;
  g.control = {"W1", {Ball::interval(1.05, 2.0), Ball::interval(-2.0, -1.05)}};
  g.observation = {"W2", {Ball::interval(2.05, 3.5), Ball::interval(-3.5, -2.05)}};
  return g;
}

ExperimentConfig defaults() {
  ExperimentConfig cfg;
  cfg.grid = default_grid();
  cfg.nonlinearity = {TermSpec{}};
  return cfg;
}

const char* kDefaultText = R"(# fracdiff experiment configuration. Every key is optional; the values
# below are the defaults.

grid:
  dim: 1                 # 1 or 2
  L: 4                   # truncation box [-L, L]^dim
  h: 0.03125             # grid spacing, 2L/h must be an integer
  omega:                 # domain: a ball, given by lo/hi in 1-D or center/radius
    lo: -1
    hi: 1
  control:               # control window W1, a union of balls in the exterior
    name: W1
    balls:
      - {lo: 1.05, hi: 2}
      - {lo: -2, hi: -1.05}
  observation:           # observation window W2, disjoint from W1
    name: W2
    balls:
      - {lo: 2.05, hi: 3.5}
      - {lo: -3.5, hi: -2.05}
  margin: -1             # minimum gap between domain and box edge; negative means one h

time:
  T: 1
  steps: 64

operator:
  s: 0.5                 # order of the fractional Laplacian, in (0, 1)

# terms a(x) |u|^b u with increasing b >= 0; a is constant in time.
# kind: constant (amplitude) | gaussian-bump (amplitude, center, width)
#     | tabulated (file: CSV with columns x[,y],value; linear in 1-D, nearest node in 2-D)
nonlinearity:
  - {b: 1, kind: constant, amplitude: 1}

solver:
  method: picard         # picard | imex | both
  tol: 1.0e-12           # Picard update tolerance, relative to max(1, |u|)
  max_iter: 200
  stall_window: 3        # consecutive ratios >= 1 that stop the iteration

forward:
  amplitude: 0.1         # exterior data amplitude
  source: 0              # constant interior source

control:
  target: 1              # constant target on the domain
  reg: 1.0e-10           # regularization weight of the synthesized control
  reg_sweep: [1.0e-4, 1.0e-6, 1.0e-8, 1.0e-10]

inverse:
  terms: 0               # 0: number of nonlinearity terms
  known_exponents: true  # false: recover the exponents from the defects
  measurements: ""       # recorded measurement CSV; empty simulates the nonlinearity above
  lambdas: [0.00390625, 0.0078125, 0.015625, 0.03125, 0.0625, 0.125]
  stage_lambdas: []      # one per term; empty spreads them geometrically over lambdas
  reg: -1                # Tikhonov weight relative to the mean normal-matrix diagonal; negative picks the L-curve corner
  reg_candidates: [1.0e-3, 1.0e-4, 1.0e-5, 1.0e-6, 1.0e-7, 1.0e-8, 1.0e-9, 1.0e-10]
  sweeps: 4
  inner: 2
  guard: 0.5             # nodes with |u_g| below this are filled from their neighbours
  guard_limit: 0.01      # largest accepted guarded fraction
  tol: 1.0e-14           # Picard tolerance of the simulated measurements

verify:
  samples: 10            # random instances per check

output:
  dir: out

seed: 1
)";

void check_config(const Reader& rd, const YAML::Node& root, ExperimentConfig& cfg) {
  // deepest node present along `path`, for the diagnostic position
  auto at = [&](std::initializer_list<const char*> path) {
    YAML::Node n;
    n.reset(root);
    for (const char* key : path) {
      const YAML::Node& cur = n;
      if (!cur.IsMap() || !cur[key]) break;
      const YAML::Node next = cur[key];
      n.reset(next);
    }
    return n;
  };
  if (!(cfg.s > 0.0 && cfg.s < 1.0)) rd.fail(at({"operator", "s"}), "s must lie in (0, 1)");
  try {
    (void)make_grid(cfg);
  } catch (const GeometryError& e) {
    rd.fail(at({"grid"}), e.what());
  }
  try {
    (void)make_time(cfg);
  } catch (const InvalidArgument& e) {
    rd.fail(at({"time"}), e.what());
  }
  if (cfg.solver != "picard" && cfg.solver != "imex" && cfg.solver != "both") {
    rd.fail(at({"solver", "method"}), "solver.method must be picard, imex or both");
  }
  if (!(cfg.picard.tol > 0.0) || cfg.picard.max_iter < 1 || cfg.picard.stall_window < 1) {
    rd.fail(at({"solver"}), "solver tolerances must be positive");
  }
  for (std::size_t k = 0; k < cfg.nonlinearity.size(); ++k) {
    const TermSpec& t = cfg.nonlinearity[k];
    const YAML::Node node = root.IsMap() && root["nonlinearity"] ? root["nonlinearity"][k] : root;
    if (!(t.exponent >= 0.0)) rd.fail(node, "exponents must be nonnegative");
    if (k > 0 && !(t.exponent > cfg.nonlinearity[k - 1].exponent)) rd.fail(node, "exponents must increase");
    if (t.kind != "constant" && t.kind != "gaussian-bump" && t.kind != "tabulated") {
      rd.fail(node, "unknown coefficient kind '" + t.kind + "'");
    }
    if (t.kind != "tabulated" && !(t.amplitude >= 0.0)) rd.fail(node, "coefficient amplitude must be nonnegative");
    if (t.kind == "gaussian-bump" && !(t.width > 0.0)) rd.fail(node, "bump width must be positive");
    if (t.kind == "tabulated" && !fs::exists(t.file)) rd.fail(node, "coefficient file '" + t.file + "' does not exist");
  }
  const std::size_t terms = cfg.terms ? cfg.terms : cfg.nonlinearity.size();
  if (terms == 0 && (cfg.measurements.size() || !cfg.known_exponents)) {
    rd.fail(at({"inverse", "terms"}), "inverse.terms must be positive when the nonlinearity is empty");
  }
  if (cfg.known_exponents && cfg.terms && cfg.terms != cfg.nonlinearity.size()) {
    rd.fail(at({"inverse", "terms"}), "known exponents require terms to match the nonlinearity");
  }
  if (!cfg.measurements.empty() && !fs::exists(cfg.measurements)) {
    rd.fail(at({"inverse", "measurements"}), "measurement file '" + cfg.measurements + "' does not exist");
  }
  const auto& lam = cfg.recovery.lambdas;
  if (lam.size() < 2 || std::any_of(lam.begin(), lam.end(), [](double l) { return !(l > 0.0); })) {
    rd.fail(at({"inverse", "lambdas"}), "inverse.lambdas needs at least two positive amplitudes");
  }
  if (!cfg.recovery.stage_lambdas.empty() && cfg.recovery.stage_lambdas.size() != terms) {
    rd.fail(at({"inverse", "stage_lambdas"}), "inverse.stage_lambdas needs one amplitude per term");
  }
  if (cfg.recovery.reg_weight < 0.0 && cfg.recovery.reg_candidates.size() < 3) {
    rd.fail(at({"inverse", "reg_candidates"}), "L-curve selection needs at least three candidates");
  }
  if (cfg.recovery.sweeps < 1 || cfg.recovery.inner < 1) rd.fail(at({"inverse"}), "sweeps and inner must be positive");
  if (!(cfg.recovery.guard >= 0.0) || !(cfg.recovery.guard_limit >= 0.0)) {
    rd.fail(at({"inverse"}), "guard settings must be nonnegative");
  }
  if (!(cfg.control_reg >= 0.0)) rd.fail(at({"control", "reg"}), "control.reg must be nonnegative");
  if (cfg.samples < 1) rd.fail(at({"verify", "samples"}), "verify.samples must be positive");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& name, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << name << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
    throw ConfigError(os.str());
  }
  const Reader rd(name, base_dir);
  ExperimentConfig cfg = defaults();
  cfg.origin = name;
  if (root.IsNull()) {
    check_config(rd, root, cfg);
    return cfg;
  }
  rd.keys(root, "top level",
          {"grid", "time", "operator", "nonlinearity", "solver", "forward", "control", "inverse", "verify", "output",
           "seed"});

  if (const auto g = root["grid"]) {
    rd.keys(g, "grid", {"dim", "L", "h", "omega", "control", "observation", "margin"});
    if (g["dim"]) cfg.grid.dim = static_cast<int>(rd.integer(g["dim"], "dim"));
    if (g["L"]) cfg.grid.half_width = rd.number(g["L"], "L");
    if (g["h"]) cfg.grid.spacing = rd.number(g["h"], "h");
    if (g["omega"]) cfg.grid.omega = rd.ball(g["omega"], "grid.omega");
    if (g["control"]) cfg.grid.control = rd.window(g["control"], "grid.control", cfg.grid.control);
    if (g["observation"]) cfg.grid.observation = rd.window(g["observation"], "grid.observation", cfg.grid.observation);
    if (g["margin"]) cfg.grid.exterior_margin = rd.number(g["margin"], "margin");
  }
  if (const auto t = root["time"]) {
    rd.keys(t, "time", {"T", "steps"});
    if (t["T"]) cfg.horizon = rd.number(t["T"], "T");
    if (t["steps"]) cfg.steps = rd.integer(t["steps"], "steps");
  }
  if (const auto o = root["operator"]) {
    rd.keys(o, "operator", {"s"});
    if (o["s"]) cfg.s = rd.number(o["s"], "s");
  }
  if (const auto n = root["nonlinearity"]) {
    if (!n.IsSequence() && !n.IsNull()) rd.fail(n, "'nonlinearity' must be a list of terms");
    cfg.nonlinearity.clear();
    for (const auto& item : n) {
      rd.keys(item, "nonlinearity", {"b", "kind", "amplitude", "center", "width", "file"});
      TermSpec t;
      if (!item["b"]) rd.fail(item, "every term needs an exponent 'b'");
      t.exponent = rd.number(item["b"], "b");
      if (item["kind"]) t.kind = rd.text(item["kind"], "kind");
      if (item["amplitude"]) t.amplitude = rd.number(item["amplitude"], "amplitude");
      if (item["center"]) t.center = rd.point(item["center"], "center");
      if (item["width"]) t.width = rd.number(item["width"], "width");
      if (item["file"]) t.file = rd.path(item["file"], "file");
      if (t.kind == "tabulated" && t.file.empty()) rd.fail(item, "tabulated coefficients need a 'file'");
      cfg.nonlinearity.push_back(t);
    }
  }
  if (const auto s = root["solver"]) {
    rd.keys(s, "solver", {"method", "tol", "max_iter", "stall_window"});
    if (s["method"]) cfg.solver = rd.text(s["method"], "method");
    if (s["tol"]) cfg.picard.tol = rd.number(s["tol"], "tol");
    if (s["max_iter"]) cfg.picard.max_iter = rd.integer(s["max_iter"], "max_iter");
    if (s["stall_window"]) cfg.picard.stall_window = rd.integer(s["stall_window"], "stall_window");
  }
  if (const auto f = root["forward"]) {
    rd.keys(f, "forward", {"amplitude", "source"});
    if (f["amplitude"]) cfg.data_amplitude = rd.number(f["amplitude"], "amplitude");
    if (f["source"]) cfg.source = rd.number(f["source"], "source");
  }
  if (const auto c = root["control"]) {
    rd.keys(c, "control", {"target", "reg", "reg_sweep"});
    if (c["target"]) cfg.control_target = rd.number(c["target"], "target");
    if (c["reg"]) cfg.control_reg = rd.number(c["reg"], "reg");
    if (c["reg_sweep"]) cfg.control_reg_sweep = rd.numbers(c["reg_sweep"], "reg_sweep");
  }
  if (const auto i = root["inverse"]) {
    rd.keys(i, "inverse",
            {"terms", "known_exponents", "measurements", "lambdas", "stage_lambdas", "reg", "reg_candidates", "sweeps",
             "inner", "guard", "guard_limit", "tol"});
    if (i["terms"]) {
      const Index terms = rd.integer(i["terms"], "terms");
      if (terms < 0) rd.fail(i["terms"], "'terms' must be nonnegative");
      cfg.terms = static_cast<std::size_t>(terms);
    }
    if (i["known_exponents"]) cfg.known_exponents = rd.boolean(i["known_exponents"], "known_exponents");
    if (i["measurements"]) {
      const std::string m = rd.text(i["measurements"], "measurements");
      cfg.measurements = m.empty() ? m : rd.path(i["measurements"], "measurements");
    }
    if (i["lambdas"]) cfg.recovery.lambdas = rd.numbers(i["lambdas"], "lambdas");
    if (i["stage_lambdas"]) cfg.recovery.stage_lambdas = rd.numbers(i["stage_lambdas"], "stage_lambdas");
    if (i["reg"]) cfg.recovery.reg_weight = rd.number(i["reg"], "reg");
    if (i["reg_candidates"]) cfg.recovery.reg_candidates = rd.numbers(i["reg_candidates"], "reg_candidates");
    if (i["sweeps"]) cfg.recovery.sweeps = rd.integer(i["sweeps"], "sweeps");
    if (i["inner"]) cfg.recovery.inner = rd.integer(i["inner"], "inner");
    if (i["guard"]) cfg.recovery.guard = rd.number(i["guard"], "guard");
    if (i["guard_limit"]) cfg.recovery.guard_limit = rd.number(i["guard_limit"], "guard_limit");
    if (i["tol"]) cfg.recovery.picard.tol = rd.number(i["tol"], "tol");
  }
  if (const auto v = root["verify"]) {
    rd.keys(v, "verify", {"samples"});
    if (v["samples"]) cfg.samples = rd.integer(v["samples"], "samples");
  }
  if (const auto o = root["output"]) {
    rd.keys(o, "output", {"dir"});
    if (o["dir"]) cfg.output = rd.text(o["dir"], "dir");
  }
  if (root["seed"]) {
    const Index seed = rd.integer(root["seed"], "seed");
    if (seed < 0) rd.fail(root["seed"], "'seed' must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  check_config(rd, root, cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const fs::path base = fs::path(path).parent_path();
  return parse_config(ss.str(), path, base.empty() ? "." : base.string());
}

std::string default_config_text() { return kDefaultText; }

std::string canonical_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  auto num = [](double v) { return format_double(v); };
  auto nums = [&](const std::vector<double>& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (double x : v) e << num(x);
    e << YAML::EndSeq;
  };
  auto ball = [&](const Ball& b) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "center" << YAML::Value << YAML::Flow << YAML::BeginSeq
      << num(b.center[0]) << num(b.center[1]) << YAML::EndSeq << YAML::Key << "radius" << YAML::Value << num(b.radius)
      << YAML::EndMap;
  };
  auto window = [&](const WindowSpec& w) {
    e << YAML::BeginMap << YAML::Key << "name" << YAML::Value << w.name << YAML::Key << "balls" << YAML::Value
      << YAML::BeginSeq;
    for (const auto& b : w.parts) ball(b);
    e << YAML::EndSeq << YAML::EndMap;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dim" << YAML::Value << cfg.grid.dim;
  e << YAML::Key << "L" << YAML::Value << num(cfg.grid.half_width);
  e << YAML::Key << "h" << YAML::Value << num(cfg.grid.spacing);
  e << YAML::Key << "omega" << YAML::Value;
  ball(cfg.grid.omega);
  e << YAML::Key << "control" << YAML::Value;
  window(cfg.grid.control);
  e << YAML::Key << "observation" << YAML::Value;
  window(cfg.grid.observation);
  e << YAML::Key << "margin" << YAML::Value << num(cfg.grid.exterior_margin);
  e << YAML::EndMap;
  e << YAML::Key << "time" << YAML::Value << YAML::BeginMap << YAML::Key << "T" << YAML::Value << num(cfg.horizon)
    << YAML::Key << "steps" << YAML::Value << cfg.steps << YAML::EndMap;
  e << YAML::Key << "operator" << YAML::Value << YAML::BeginMap << YAML::Key << "s" << YAML::Value << num(cfg.s)
    << YAML::EndMap;
  e << YAML::Key << "nonlinearity" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : cfg.nonlinearity) {
    e << YAML::BeginMap << YAML::Key << "b" << YAML::Value << num(t.exponent) << YAML::Key << "kind" << YAML::Value
      << t.kind << YAML::Key << "amplitude" << YAML::Value << num(t.amplitude) << YAML::Key << "center"
      << YAML::Value << YAML::Flow << YAML::BeginSeq << num(t.center[0]) << num(t.center[1]) << YAML::EndSeq
      << YAML::Key << "width" << YAML::Value << num(t.width) << YAML::Key << "file" << YAML::Value << t.file
      << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap << YAML::Key << "method" << YAML::Value << cfg.solver
    << YAML::Key << "tol" << YAML::Value << num(cfg.picard.tol) << YAML::Key << "max_iter" << YAML::Value
    << cfg.picard.max_iter << YAML::Key << "stall_window" << YAML::Value << cfg.picard.stall_window << YAML::EndMap;
  e << YAML::Key << "forward" << YAML::Value << YAML::BeginMap << YAML::Key << "amplitude" << YAML::Value
    << num(cfg.data_amplitude) << YAML::Key << "source" << YAML::Value << num(cfg.source) << YAML::EndMap;
  e << YAML::Key << "control" << YAML::Value << YAML::BeginMap << YAML::Key << "target" << YAML::Value
    << num(cfg.control_target) << YAML::Key << "reg" << YAML::Value << num(cfg.control_reg) << YAML::Key
    << "reg_sweep" << YAML::Value;
  nums(cfg.control_reg_sweep);
  e << YAML::EndMap;
  const RecoveryOptions& r = cfg.recovery;
  e << YAML::Key << "inverse" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "terms" << YAML::Value << cfg.terms;
  e << YAML::Key << "known_exponents" << YAML::Value << cfg.known_exponents;
  e << YAML::Key << "measurements" << YAML::Value << cfg.measurements;
  e << YAML::Key << "lambdas" << YAML::Value;
  nums(r.lambdas);
  e << YAML::Key << "stage_lambdas" << YAML::Value;
  nums(r.stage_lambdas);
  e << YAML::Key << "reg" << YAML::Value << num(r.reg_weight);
  e << YAML::Key << "reg_candidates" << YAML::Value;
  nums(r.reg_candidates);
  e << YAML::Key << "sweeps" << YAML::Value << r.sweeps << YAML::Key << "inner" << YAML::Value << r.inner;
  e << YAML::Key << "guard" << YAML::Value << num(r.guard) << YAML::Key << "guard_limit" << YAML::Value
    << num(r.guard_limit);
  e << YAML::Key << "tol" << YAML::Value << num(r.picard.tol);
  e << YAML::EndMap;
  e << YAML::Key << "verify" << YAML::Value << YAML::BeginMap << YAML::Key << "samples" << YAML::Value << cfg.samples
    << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap << YAML::Key << "dir" << YAML::Value << cfg.output
    << YAML::EndMap;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::EndMap;
  return e.c_str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig content = cfg;
  content.output.clear();
  return hex64(fnv1a(canonical_config(content)));
}

SpaceGrid make_grid(const ExperimentConfig& cfg) { return SpaceGrid(cfg.grid); }

TimeGrid make_time(const ExperimentConfig& cfg) { return TimeGrid(cfg.horizon, cfg.steps); }

Eigen::MatrixXd coefficient_block(const TermSpec& term, const SpaceGrid& grid, const TimeGrid& time) {
  const auto& inner = grid.indices(Region::interior);
  Eigen::VectorXd a(static_cast<Index>(inner.size()));
  if (term.kind == "constant") {
    a.setConstant(term.amplitude);
  } else if (term.kind == "gaussian-bump") {
    for (std::size_t i = 0; i < inner.size(); ++i) {
      const auto& x = grid.coord(inner[i]);
      double r2 = std::pow(x[0] - term.center[0], 2);
      if (grid.dim() == 2) r2 += std::pow(x[1] - term.center[1], 2);
      a(static_cast<Index>(i)) = term.amplitude * std::exp(-r2 / (2.0 * term.width * term.width));
    }
  } else if (term.kind == "tabulated") {
    std::ifstream in(term.file);
    if (!in) throw ConfigError("cannot open coefficient file '" + term.file + "'");
    std::vector<std::array<double, 3>> table;  // x, y, value
    std::string line;
    Index lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
      std::vector<double> v;
      std::stringstream row(line);
      std::string cell;
      try {
        while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(term.file + ":" + std::to_string(lineno) + ": malformed number");
      }
      if (static_cast<int>(v.size()) != grid.dim() + 1) {
        throw ConfigError(term.file + ":" + std::to_string(lineno) + ": expected " + std::to_string(grid.dim() + 1) +
                          " columns");
      }
      if (v.back() < 0.0) throw ConfigError(term.file + ":" + std::to_string(lineno) + ": negative coefficient");
      table.push_back({v[0], grid.dim() == 2 ? v[1] : 0.0, v.back()});
    }
    if (table.empty()) throw ConfigError("coefficient file '" + term.file + "' has no rows");
    if (grid.dim() == 1) std::sort(table.begin(), table.end());
    for (std::size_t i = 0; i < inner.size(); ++i) {
      const auto& x = grid.coord(inner[i]);
      double value = 0.0;
      if (grid.dim() == 1) {
        auto hi = std::lower_bound(table.begin(), table.end(), x[0],
                                   [](const std::array<double, 3>& e, double v) { return e[0] < v; });
        if (hi == table.begin()) {
          value = hi->at(2);
        } else if (hi == table.end()) {
          value = table.back()[2];
        } else {
          const auto lo = hi - 1;
          const double w = ((*hi)[0] - (*lo)[0]) > 0.0 ? (x[0] - (*lo)[0]) / ((*hi)[0] - (*lo)[0]) : 0.0;
          value = (1.0 - w) * (*lo)[2] + w * (*hi)[2];
        }
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : table) {
          const double d = std::hypot(e[0] - x[0], e[1] - x[1]);
          if (d < best) {
            best = d;
            value = e[2];
          }
        }
      }
      a(static_cast<Index>(i)) = value;
    }
  } else {
    throw ConfigError("unknown coefficient kind '" + term.kind + "'");
  }
  return a.replicate(1, time.size());
}

Nonlinearity make_nonlinearity(const ExperimentConfig& cfg, const SpaceGrid& grid, const TimeGrid& time) {
  Nonlinearity nl;
  for (const auto& t : cfg.nonlinearity) nl.add_term(t.exponent, coefficient_block(t, grid, time));
  return nl;
}

SpaceTimeField probe_data(const SpaceGrid& grid, const TimeGrid& time, double amplitude) {
  const auto& window = grid.indices(Region::control);
  const auto& parts = grid.spec().control.parts;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(static_cast<Index>(window.size()), time.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const auto& x = grid.coord(window[i]);
    double phi = 0.0;
    for (const auto& b : parts) {
      double r2 = std::pow(x[0] - b.center[0], 2);
      if (grid.dim() == 2) r2 += std::pow(x[1] - b.center[1], 2);
      const double rho2 = r2 / (b.radius * b.radius);
      if (rho2 < 1.0) phi = std::max(phi, std::exp(1.0 - 1.0 / (1.0 - rho2)));
    }
    for (Index j = 0; j < time.size(); ++j) {
      const double theta = std::sin(0.5 * std::numbers::pi * time.at(j) / time.horizon());
      block(static_cast<Index>(i), j) = amplitude * phi * theta * theta;
    }
  }
  return SpaceTimeField::from_block(grid, time, Region::control, block);
}

}  // namespace fracdiff
