#pragma once

#include "fracdiff/fracop.hpp"
#include "fracdiff/geometry.hpp"
#include "fracdiff/semigroup.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fracdiff {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t value);

/// Hash of the grid layout: dimension, box, spacing, domain and windows.
std::string grid_hash(const SpaceGrid& grid);
/// Hash of the raw doubles of a matrix, shape included.
std::string matrix_hash(const Eigen::MatrixXd& values);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Writes every artifact of one run into a directory. Each CSV gets a JSON
/// header `<name>.json` carrying the config hash; finish() writes the run
/// manifest listing every file. Output is deterministic for identical input.
class ArtifactWriter {
 public:
  ArtifactWriter(std::string directory, std::string config_hash);

  const std::string& directory() const { return directory_; }
  const std::string& config_hash() const { return config_hash_; }

  /// Returns the path of the CSV.
  std::string csv(const std::string& name, const std::vector<std::string>& columns,
                  const std::vector<std::vector<double>>& rows, nlohmann::json header = nlohmann::json::object());
  /// Text cells, written verbatim.
  std::string csv(const std::string& name, const std::vector<std::string>& columns,
                  const std::vector<std::vector<std::string>>& rows, nlohmann::json header = nlohmann::json::object());
  std::string json(const std::string& name, nlohmann::json body);
  /// Lists a file written elsewhere in the manifest.
  void note(const std::string& file) { files_.push_back(file); }
  /// Writes manifest.json.
  void finish(const std::string& command, nlohmann::json summary);

 private:
  std::string path(const std::string& file) const;

  std::string directory_;
  std::string config_hash_;
  std::vector<std::string> files_;
};

/// One row per node: node id, coordinates, mask flags. Header: dim, L, h, T, N_t.
void write_grid(ArtifactWriter& out, const std::string& name, const SpaceGrid& grid, const TimeGrid& time);
/// Long format (node, step, t, value) over the nodes of `region`.
void write_field(ArtifactWriter& out, const std::string& name, const SpaceGrid& grid, const TimeGrid& time,
                 const SpaceTimeField& field, Region region);
/// Dense operator as (row, col, value) with header s, h, L, c_{n,s} and the kernel convention.
void write_operator(ArtifactWriter& out, const std::string& name, const FracOperator& op);
/// Rows (t, norm, bound, ratio).
void write_decay(ArtifactWriter& out, const std::string& name, const DecayReport& report);

/// Recorded-measurement format read by RecordedSource: CSV rows
/// (lambda, node, step, value) over observation nodes plus `<stem>.json`
/// with the grid and control hashes.
void write_measurements(const std::string& csv_path, const SpaceGrid& grid, const std::vector<double>& lambdas,
                        const std::vector<Eigen::MatrixXd>& values, const std::string& control_hash,
                        const std::string& config_hash);

}  // namespace fracdiff
