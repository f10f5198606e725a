#pragma once

// JSON/CSV plumbing: mixture specs, report serialization, atomic writes.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsistab/counterex.hpp"
#include "lsistab/error.hpp"
#include "lsistab/estimate.hpp"
#include "lsistab/gaussmix.hpp"

namespace lsistab {

using json = nlohmann::json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Parsing with located diagnostics.

/// Parses `text`; syntax errors become ConfigError naming source:line:column.
inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    // drop the library's own prefix and position, keep the reason
    const auto cut = what.find(": ", what.find("parse error"));
    if (cut != std::string::npos) what = what.substr(cut + 2);
    fail(ErrorKind::ConfigError, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ConfigError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

/// A JSON document given inline (starting with '{') or as a file path.
inline json json_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return parse_json_text(arg, "<inline>");
  return read_json_file(arg);
}

namespace detail {

[[noreturn]] inline void field_error(const std::string& path, const std::string& msg) {
  fail(ErrorKind::ConfigError, "field '" + path + "': " + msg);
}

inline const json& require_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) field_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  return j.get<double>();
}

inline VectorXd as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline MatrixXd as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) field_error(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const VectorXd row = as_vector(j[r], path + "[" + std::to_string(r) + "]");
    if (r == 0) m.resize(static_cast<Index>(rows), row.size());
    if (row.size() != m.cols()) field_error(path + "[" + std::to_string(r) + "]", "row length differs from the first row");
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace detail

/// {"dim": n, "components": [{"w", "mean", "cov"}]} or
/// {"family": "variance_blowup" | "isotropic", "k": ...}.
inline GaussianMixture parse_mixture(const json& j, const std::string& path = "measure") {
  if (!j.is_object()) detail::field_error(path, "expected an object");
  if (j.contains("family")) {
    const json& f = j.at("family");
    if (!f.is_string()) detail::field_error(path + ".family", "expected a string");
    const double k = detail::as_number(detail::require_field(j, "k", path), path + ".k");
    try {
      return family_member(parse_family(f.get<std::string>()), k).mixture;
    } catch (const Error& e) {
      detail::field_error(path, e.what());
    }
  }
  const double dim = detail::as_number(detail::require_field(j, "dim", path), path + ".dim");
  if (dim < 1 || dim != std::floor(dim)) detail::field_error(path + ".dim", "expected a positive integer");
  const json& comps = detail::require_field(j, "components", path);
  if (!comps.is_array() || comps.empty()) detail::field_error(path + ".components", "expected a non-empty array");
  std::vector<ComponentSpec> specs;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string p = path + ".components[" + std::to_string(i) + "]";
    ComponentSpec c;
    c.weight = detail::as_number(detail::require_field(comps[i], "w", p), p + ".w");
    c.mean = detail::as_vector(detail::require_field(comps[i], "mean", p), p + ".mean");
    c.cov = detail::as_matrix(detail::require_field(comps[i], "cov", p), p + ".cov");
    specs.push_back(std::move(c));
  }
  try {
    return mixture_new(static_cast<Index>(dim), specs);
  } catch (const Error& e) {
    detail::field_error(path, std::string(to_string(e.kind())) + ": " + e.what());
  }
}

inline MatrixXd read_points_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      double v = 0.0;
      const char* b = cell.data();
      while (*b == ' ') ++b;
      const auto res = std::from_chars(b, cell.data() + cell.size(), v);
      if (res.ec != std::errc()) {
        if (rows.empty() && row.empty()) break;  // header line
        fail(ErrorKind::ConfigError, path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows[0].size())
      fail(ErrorKind::ConfigError, path + ":" + std::to_string(lineno) + ": expected " + std::to_string(rows[0].size()) + " columns");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::ConfigError, path + ": no data rows");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
  return m;
}

// ---------------------------------------------------------------------------
// Serialization.

inline json number(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

inline json to_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

inline json to_json(const MatrixXd& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(to_json(VectorXd(m.row(r).transpose())));
  return a;
}

inline json to_json(const Estimate& e) {
  return {{"value", number(e.value)}, {"abs_error", number(e.abs_error)}, {"method", to_string(e.method)}, {"n", e.n}};
}

inline json to_json(const MatrixEstimate& e) {
  return {{"value", to_json(e.value)}, {"abs_error", number(e.abs_error)}, {"method", to_string(e.method)}, {"n", e.n}};
}

inline json to_json(const BoundReport& r) {
  json extras = json::object();
  for (const auto& [k, v] : r.extras) extras[k] = number(v);
  return {{"name", r.name},
          {"lhs", to_json(r.lhs)},
          {"rhs", to_json(r.rhs)},
          {"direction", to_string(r.direction)},
          {"slack", number(r.slack)},
          {"tolerance", number(r.tolerance())},
          {"holds", r.holds},
          {"preconditions_met", r.preconditions_met},
          {"notes", r.notes},
          {"extras", extras}};
}

inline json to_json(const GaussianMixture& mu) {
  json comps = json::array();
  for (const auto& c : mu.components()) comps.push_back({{"w", number(c.weight)}, {"mean", to_json(c.mean)}, {"cov", to_json(c.cov)}});
  return {{"dim", mu.dim()}, {"components", comps}};
}

// ---------------------------------------------------------------------------
// Output documents. The first line carries all run metadata including the
// timestamp, so content below it is comparable byte for byte across runs.

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json run_metadata(const std::string& command, std::uint64_t seed) {
  return {{"tool", "lsistab"}, {"command", command}, {"seed", seed}, {"timestamp", utc_timestamp()}};
}

inline std::string json_document(const json& meta, const json& result) {
  return "{\"meta\": " + meta.dump() + ",\n\"result\": " + result.dump(2) + "}\n";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != columns_.size()) fail(ErrorKind::DimensionMismatch, "csv row has the wrong number of cells");
    rows_.push_back(std::move(row));
  }

  void add(const std::vector<double>& row) {
    std::vector<std::string> cells;
    for (double v : row) cells.push_back(format_double(v));
    add(std::move(cells));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }

  std::string str(const json& meta) const {
    std::string out = "# " + meta.dump() + "\n";
    append_line(out, columns_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::ConfigError, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) fail(ErrorKind::ConfigError, "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

/// Drops the metadata line (first line) of an output document.
inline std::string strip_metadata(const std::string& doc) {
  const auto nl = doc.find('\n');
  return nl == std::string::npos ? std::string() : doc.substr(nl + 1);
}

}  // namespace lsistab
