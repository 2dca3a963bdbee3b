#include "fracdiff/io.hpp"

#include "fracdiff/errors.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fracdiff {

namespace fs = std::filesystem;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string grid_hash(const SpaceGrid& grid) {
  const GridSpec& g = grid.spec();
  std::ostringstream os;
  auto ball = [&](const Ball& b) {
    os << format_double(b.center[0]) << ',' << format_double(b.center[1]) << ',' << format_double(b.radius) << ';';
  };
  os << g.dim << '|' << format_double(g.half_width) << '|' << format_double(g.spacing) << '|';
  ball(g.omega);
  for (const WindowSpec* w : {&g.control, &g.observation}) {
    os << '|' << w->name << ':';
    for (const auto& b : w->parts) ball(b);
  }
  return hex64(fnv1a(os.str()));
}

std::string matrix_hash(const Eigen::MatrixXd& values) {
  std::ostringstream os;
  os << values.rows() << 'x' << values.cols() << ':';
  std::uint64_t h = fnv1a(os.str());
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(values.data()),
                             static_cast<std::size_t>(values.size()) * sizeof(double)),
            h);
  return hex64(h);
}

ArtifactWriter::ArtifactWriter(std::string directory, std::string config_hash)
    : directory_(std::move(directory)), config_hash_(std::move(config_hash)) {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + directory_ + "': " + ec.message());
}

std::string ArtifactWriter::path(const std::string& file) const { return (fs::path(directory_) / file).string(); }

std::string ArtifactWriter::csv(const std::string& name, const std::vector<std::string>& columns,
                                const std::vector<std::vector<double>>& rows, nlohmann::json header) {
  std::vector<std::vector<std::string>> text;
  text.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (double v : row) cells.push_back(format_double(v));
    text.push_back(std::move(cells));
  }
  return csv(name, columns, text, std::move(header));
}

std::string ArtifactWriter::csv(const std::string& name, const std::vector<std::string>& columns,
                                const std::vector<std::vector<std::string>>& rows, nlohmann::json header) {
  const std::string file = name + ".csv";
  std::ofstream os(path(file));
  if (!os) throw ConfigError("cannot write '" + path(file) + "'");
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
  header["config_hash"] = config_hash_;
  header["columns"] = columns;
  header["rows"] = rows.size();
  json(name, std::move(header));
  files_.push_back(file);
  return path(file);
}

std::string ArtifactWriter::json(const std::string& name, nlohmann::json body) {
  const std::string file = name + ".json";
  body["config_hash"] = config_hash_;
  std::ofstream os(path(file));
  if (!os) throw ConfigError("cannot write '" + path(file) + "'");
  os << body.dump(2) << '\n';
  files_.push_back(file);
  return path(file);
}

void ArtifactWriter::finish(const std::string& command, nlohmann::json summary) {
  nlohmann::json m;
  m["command"] = command;
  m["config_hash"] = config_hash_;
  m["files"] = files_;
  m["summary"] = std::move(summary);
  std::ofstream os(path("manifest.json"));
  if (!os) throw ConfigError("cannot write '" + path("manifest.json") + "'");
  os << m.dump(2) << '\n';
}

void write_grid(ArtifactWriter& out, const std::string& name, const SpaceGrid& grid, const TimeGrid& time) {
  std::vector<std::string> cols{"node", "x"};
  if (grid.dim() == 2) cols.push_back("y");
  for (const char* c : {"interior", "exterior", "control", "observation"}) cols.emplace_back(c);
  std::vector<std::vector<double>> rows;
  for (Index n = 0; n < grid.size(); ++n) {
    std::vector<double> row{static_cast<double>(n), grid.coord(n)[0]};
    if (grid.dim() == 2) row.push_back(grid.coord(n)[1]);
    for (Region r : {Region::interior, Region::exterior, Region::control, Region::observation}) {
      row.push_back(grid.in(r, n) ? 1.0 : 0.0);
    }
    rows.push_back(std::move(row));
  }
  out.csv(name, cols, rows,
          {{"dim", grid.dim()}, {"L", grid.half_width()}, {"h", grid.spacing()}, {"T", time.horizon()},
           {"N_t", time.steps()}, {"grid_hash", grid_hash(grid)}});
}

void write_field(ArtifactWriter& out, const std::string& name, const SpaceGrid& grid, const TimeGrid& time,
                 const SpaceTimeField& field, Region region) {
  std::vector<std::vector<double>> rows;
  for (Index n : grid.indices(region)) {
    for (Index j = 0; j < time.size(); ++j) {
      rows.push_back({static_cast<double>(n), static_cast<double>(j), time.at(j), field(n, j)});
    }
  }
  out.csv(name, {"node", "step", "t", "value"}, rows,
          {{"region", to_string(region)}, {"grid_hash", grid_hash(grid)}, {"field_hash", matrix_hash(field.values())}});
}

void write_operator(ArtifactWriter& out, const std::string& name, const FracOperator& op) {
  const Eigen::MatrixXd& a = op.matrix();
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(a.size()));
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) rows.push_back({static_cast<double>(i), static_cast<double>(j), a(i, j)});
  }
  const SpaceGrid& g = op.grid();
  out.csv(name, {"row", "col", "value"}, rows,
          {{"s", op.order()},
           {"h", g.spacing()},
           {"L", g.half_width()},
           {"dim", g.dim()},
           {"c_ns", op.constant()},
           {"convention", "normalized"},
           {"tail", op.tail_mode() == TailMode::analytic ? "analytic" : "none"},
           {"grid_hash", grid_hash(g)}});
}

void write_decay(ArtifactWriter& out, const std::string& name, const DecayReport& report) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : report.rows) rows.push_back({r.t, r.norm, r.bound, r.ratio});
  out.csv(name, {"t", "norm", "bound", "ratio"}, rows,
          {{"r", report.r},
           {"p", std::isinf(report.p) ? nlohmann::json("inf") : nlohmann::json(report.p)},
           {"theory_exponent", report.theory_exponent},
           {"slope", report.slope},
           {"max_ratio", report.max_ratio},
           {"median_ratio", report.median_ratio}});
}

void write_measurements(const std::string& csv_path, const SpaceGrid& grid, const std::vector<double>& lambdas,
                        const std::vector<Eigen::MatrixXd>& values, const std::string& control_hash,
                        const std::string& config_hash) {
  if (lambdas.size() != values.size()) throw InvalidArgument("one measurement block per lambda is required");
  const auto& obs = grid.indices(Region::observation);
  std::ofstream os(csv_path);
  if (!os) throw ConfigError("cannot write '" + csv_path + "'");
  os << "lambda,node,step,value\n";
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const Eigen::MatrixXd& v = values[k];
    if (v.rows() != static_cast<Index>(obs.size())) throw InvalidArgument("measurement block has the wrong shape");
    for (Index j = 0; j < v.cols(); ++j) {
      for (Index i = 0; i < v.rows(); ++i) {
        os << format_double(lambdas[k]) << ',' << obs[static_cast<std::size_t>(i)] << ',' << j << ','
           << format_double(v(i, j)) << '\n';
      }
    }
  }
  fs::path header(csv_path);
  header.replace_extension(".json");
  std::ofstream hs(header);
  if (!hs) throw ConfigError("cannot write '" + header.string() + "'");
  nlohmann::json j{{"grid_hash", grid_hash(grid)},
                   {"control_hash", control_hash},
                   {"config_hash", config_hash},
                   {"lambdas", lambdas}};
  hs << j.dump(2) << '\n';
}

}  // namespace fracdiff
