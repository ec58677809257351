#include "ddlqr/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "ddlqr/error.hpp"

namespace ddlqr {

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& cell, std::size_t line) {
  if (cell == "inf") return INFINITY;
  if (cell == "-inf") return -INFINITY;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || cell.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "line " + std::to_string(line) + ": '" + cell + "' is not a number");
  }
  return v;
}

}  // namespace

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw Error(ErrorCode::DimensionMismatch, name + ": row has " + std::to_string(row.size()) + " cells, header has " +
                                                  std::to_string(header.size()));
  }
  for (const auto& cell : row) {
    if (cell.find_first_of(",\r\n") != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, name + ": cell '" + cell + "' contains a separator");
    }
  }
  rows.push_back(std::move(row));
}

std::size_t Table::column(std::string_view col) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == col) return i;
  throw Error(ErrorCode::InvalidArgument, name + ": no column '" + std::string(col) + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const Table& t) {
  std::string out;
  const auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(t.header);
  for (const auto& r : t.rows) emit(r);
  return out;
}

Table parse_csv(std::string_view text, std::string name) {
  Table t;
  t.name = std::move(name);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::ConfigInvalid, t.name + " line " + std::to_string(line_no) + ": expected " +
                                                std::to_string(t.header.size()) + " cells, got " +
                                                std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw Error(ErrorCode::ConfigInvalid, t.name + ": missing CSV header");
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot rename into '" + path.string() + "'");
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(std::move(row));
  }
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::ConfigInvalid, where + ": expected a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw Error(ErrorCode::ConfigInvalid, where + "[0]: expected a nonempty row");
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != cols) {
      throw Error(ErrorCode::ConfigInvalid, at + ": expected " + std::to_string(cols) + " numbers");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) {
        throw Error(ErrorCode::ConfigInvalid, at + "[" + std::to_string(c) + "]: expected a number");
      }
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

nlohmann::json gain_result_to_json(const GainResult& g) {
  nlohmann::json j;
  j["K"] = matrix_to_json(g.k);
  j["P"] = matrix_to_json(g.p);
  if (std::isfinite(g.cost)) {
    j["cost"] = g.cost;
  } else {
    j["cost"] = nullptr;
  }
  if (g.stabilizing) {
    j["stabilizing"] = *g.stabilizing;
  } else {
    j["stabilizing"] = nullptr;
  }
  const auto& d = g.diagnostics;
  j["diagnostics"] = {{"method", d.method},
                      {"status", d.status},
                      {"iterations", d.iterations},
                      {"primal_residual", d.primal_residual},
                      {"dual_residual", d.dual_residual},
                      {"gap", d.gap},
                      {"riccati_residual", d.riccati_residual}};
  if (g.certificate) {
    const auto& c = *g.certificate;
    j["certificate"] = {{"Xi", matrix_to_json(c.xi)},
                        {"Y", matrix_to_json(c.y)},
                        {"P", matrix_to_json(c.p)},
                        {"L", matrix_to_json(c.l)},
                        {"K", matrix_to_json(c.k)}};
  }
  return j;
}

nlohmann::json sdp_problem_to_json(const SdpProblem& p) {
  nlohmann::json j;
  j["num_vars"] = p.num_vars;
  j["objective"] = p.objective;
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : p.blocks) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : b.terms) terms.push_back({t.var, t.row, t.col, t.value});
    j["blocks"].push_back({{"dim", b.dim}, {"constant", matrix_to_json(b.constant)}, {"terms", std::move(terms)}});
  }
  j["equalities"] = nlohmann::json::array();
  for (const auto& e : p.equalities) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& [var, c] : e.coeffs) coeffs.push_back({var, c});
    j["equalities"].push_back({{"coeffs", std::move(coeffs)}, {"rhs", e.rhs}});
  }
  return j;
}

Table data_record_table(const DataRecord& rec, std::string name) {
  rec.validate();
  Table t;
  t.name = std::move(name);
  for (std::size_t j = 0; j < rec.m(); ++j) t.header.push_back("u" + std::to_string(j + 1));
  for (std::size_t i = 0; i < rec.n(); ++i) t.header.push_back("x" + std::to_string(i + 1));
  for (std::size_t i = 0; i < rec.n(); ++i) t.header.push_back("next_x" + std::to_string(i + 1));
  for (std::size_t k = 0; k < rec.horizon(); ++k) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < rec.m(); ++j) row.push_back(format_double(rec.u0(j, k)));
    for (std::size_t i = 0; i < rec.n(); ++i) row.push_back(format_double(rec.x0(i, k)));
    for (std::size_t i = 0; i < rec.n(); ++i) row.push_back(format_double(rec.x1(i, k)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

DataRecord data_record_from_table(const Table& t) {
  std::size_t m = 0, n = 0, nn = 0;
  for (const auto& h : t.header) {
    if (h.rfind("next_x", 0) == 0) {
      ++nn;
    } else if (h.rfind("u", 0) == 0) {
      ++m;
    } else if (h.rfind("x", 0) == 0) {
      ++n;
    } else {
      throw Error(ErrorCode::ConfigInvalid, t.name + ": unexpected column '" + h + "'");
    }
  }
  if (n == 0 || m == 0 || nn != n) {
    throw Error(ErrorCode::ConfigInvalid, t.name + ": expected columns u1..um, x1..xn, next_x1..next_xn");
  }
  for (std::size_t j = 0; j < m; ++j) t.column("u" + std::to_string(j + 1));
  const std::size_t horizon = t.rows.size();
  if (horizon == 0) throw Error(ErrorCode::ConfigInvalid, t.name + ": no data rows");
  DataRecord rec{Matrix(m, horizon), Matrix(n, horizon), Matrix(n, horizon), std::nullopt};
  std::vector<std::size_t> cu(m), cx(n), cn(n);
  for (std::size_t j = 0; j < m; ++j) cu[j] = t.column("u" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i) {
    cx[i] = t.column("x" + std::to_string(i + 1));
    cn[i] = t.column("next_x" + std::to_string(i + 1));
  }
  for (std::size_t k = 0; k < horizon; ++k) {
    const auto& r = t.rows[k];
    const std::size_t line = k + 2;
    for (std::size_t j = 0; j < m; ++j) rec.u0(j, k) = parse_number(r[cu[j]], line);
    for (std::size_t i = 0; i < n; ++i) {
      rec.x0(i, k) = parse_number(r[cx[i]], line);
      rec.x1(i, k) = parse_number(r[cn[i]], line);
    }
  }
  if (!rec.u0.all_finite() || !rec.x0.all_finite() || !rec.x1.all_finite()) {
    throw Error(ErrorCode::ConfigInvalid, t.name + ": data contains non-finite values");
  }
  return rec;
}

nlohmann::json sidecar_to_json(const DataSidecar& s) {
  nlohmann::json j{{"n", s.n}, {"m", s.m}, {"T", s.horizon}, {"input_std", s.input_std}};
  if (s.system) j["system"] = {{"A", matrix_to_json(s.system->a())}, {"B", matrix_to_json(s.system->b())}};
  if (s.noise) {
    j["noise"] = {{"sigma_x", s.noise->sigma_x}, {"sigma_w", s.noise->sigma_w}, {"seed", s.noise->seed}};
  }
  return j;
}

DataSidecar sidecar_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "sidecar: expected an object");
  DataSidecar s;
  try {
    s.n = j.at("n").get<std::size_t>();
    s.m = j.at("m").get<std::size_t>();
    s.horizon = j.at("T").get<std::size_t>();
    s.input_std = j.value("input_std", 1.0);
    if (j.contains("system")) {
      const auto& sys = j.at("system");
      s.system = LtiSystem(matrix_from_json(sys.at("A"), "system.A"), matrix_from_json(sys.at("B"), "system.B"));
    }
    if (j.contains("noise")) {
      const auto& nz = j.at("noise");
      s.noise = NoiseSpec{nz.at("sigma_x").get<double>(), nz.at("sigma_w").get<double>(),
                          nz.at("seed").get<std::uint64_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("sidecar: ") + e.what());
  }
  return s;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

}  // namespace ddlqr
