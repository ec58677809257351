#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ddlqr/gain.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/matrix.hpp"
#include "ddlqr/sdp.hpp"

namespace ddlqr {

/// A CSV table with a mandatory header. Cells are already formatted.
struct Table {
  std::string name;  // file name, e.g. "example1_curves.csv"
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  /// Index of a header column; throws InvalidArgument when absent.
  std::size_t column(std::string_view name) const;
};

/// %.17g, with "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double v);

/// LF line endings, comma separated, no quoting (cells never contain
/// commas or newlines).
std::string to_csv(const Table& t);
Table parse_csv(std::string_view text, std::string name = {});

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

nlohmann::json matrix_to_json(const Matrix& m);
/// Nested row-major arrays. `where` names the key path in error messages.
Matrix matrix_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json gain_result_to_json(const GainResult& g);
/// Debug dump of a conic program (blocks as dense F0 plus term lists).
nlohmann::json sdp_problem_to_json(const SdpProblem& p);

/// Data-record CSV: one row per time step with columns u1..um, x1..xn,
/// next_x1..next_xn.
Table data_record_table(const DataRecord& rec, std::string name = "data.csv");
DataRecord data_record_from_table(const Table& t);

/// Sidecar metadata stored next to a data CSV.
struct DataSidecar {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t horizon = 0;
  std::optional<LtiSystem> system;  // generating plant, when known
  std::optional<NoiseSpec> noise;
  double input_std = 1.0;
};

nlohmann::json sidecar_to_json(const DataSidecar& s);
DataSidecar sidecar_from_json(const nlohmann::json& j);
/// "<stem>.json" next to "<stem>.csv".
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

}  // namespace ddlqr
