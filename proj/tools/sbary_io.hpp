#ifndef SBARY_TOOLS_IO_HPP_
#define SBARY_TOOLS_IO_HPP_

// File formats for the command-line tool. JSON for structured inputs and
// reports, CSV for point lists and sampled fields.

#include "sbary/sbary.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbary::io {

using nlohmann::json;

/// Malformed or unreadable input; maps to exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": malformed JSON: " + e.what());
  }
}

namespace detail {

inline double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(where + ": not finite");
  return v;
}

inline Vector vector_at(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = number_at(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix matrix_at(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected an array of rows");
  const auto rows = j.size();
  Matrix u;
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector r = vector_at(j[i], where + "[" + std::to_string(i) + "]");
    if (i == 0) u.resize(static_cast<Eigen::Index>(rows), r.size());
    if (r.size() != u.cols())
      throw InputError(where + "[" + std::to_string(i) + "]: row length differs from row 0");
    u.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return u;
}

inline std::optional<std::vector<Facet>> facets_at(const json& root, const std::string& file) {
  if (!root.contains("facets") || root["facets"].is_null()) return std::nullopt;
  const json& fs = root["facets"];
  if (!fs.is_array()) throw InputError(file + ": facets: expected an array");
  std::vector<Facet> out;
  for (std::size_t g = 0; g < fs.size(); ++g) {
    const std::string where = file + ": facets[" + std::to_string(g) + "]";
    if (!fs[g].is_object()) throw InputError(where + ": expected an object");
    if (!fs[g].contains("normal")) throw InputError(where + ".normal: missing");
    if (!fs[g].contains("offset")) throw InputError(where + ".offset: missing");
    out.push_back({vector_at(fs[g]["normal"], where + ".normal"),
                   number_at(fs[g]["offset"], where + ".offset")});
  }
  return out;
}

}  // namespace detail

/// {"name": str, "vertices": [[...]], "facets": [{"normal": [...], "offset": x}]}
inline Polytope polytope_from_json(const json& root, const std::string& file = "polytope") {
  if (!root.is_object()) throw InputError(file + ": expected a JSON object");
  if (!root.contains("vertices")) throw InputError(file + ": vertices: missing");
  const json& vs = root["vertices"];
  if (!vs.is_array() || vs.empty()) throw InputError(file + ": vertices: expected a non-empty array");
  std::vector<Vector> verts;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    verts.push_back(detail::vector_at(vs[k], file + ": vertices[" + std::to_string(k) + "]"));
    if (verts.back().size() != verts.front().size())
      throw InputError(file + ": vertices[" + std::to_string(k) + "]: dimension differs from vertices[0]");
  }
  std::string name = "polytope";
  if (root.contains("name")) {
    if (!root["name"].is_string()) throw InputError(file + ": name: expected a string");
    name = root["name"].get<std::string>();
  }
  auto facets = detail::facets_at(root, file);
  try {
    return build_polytope(std::move(verts), std::move(facets), name);
  } catch (const Error& e) {
    throw InputError(file + ": " + e.what());
  }
}

inline json polytope_to_json(const Polytope& P) {
  json out;
  out["name"] = P.name();
  out["vertices"] = json::array();
  for (const auto& v : P.vertices()) out["vertices"].push_back(std::vector<double>(v.begin(), v.end()));
  if (P.has_facets()) {
    // Facets are stored in the chart; the chart of a full-dimensional hull is
    // a translation, so only the offset changes.
    out["facets"] = json::array();
    for (const auto& f : P.facets()) {
      const Vector n = P.chart().direction_to_ambient(f.normal);
      const double off = f.offset + n.dot(P.chart().origin);
      out["facets"].push_back({{"normal", std::vector<double>(n.begin(), n.end())}, {"offset", off}});
    }
  }
  return out;
}

/// {"name", "vertex_matrices": [[[...]]], "facets": optional}
inline MatrixPolytopeModel model_from_json(const json& root, const std::string& file = "model") {
  if (!root.is_object()) throw InputError(file + ": expected a JSON object");
  if (!root.contains("vertex_matrices")) throw InputError(file + ": vertex_matrices: missing");
  const json& vm = root["vertex_matrices"];
  if (!vm.is_array() || vm.size() < 2)
    throw InputError(file + ": vertex_matrices: expected at least two matrices");
  std::vector<Matrix> mats;
  for (std::size_t k = 0; k < vm.size(); ++k) {
    const std::string where = file + ": vertex_matrices[" + std::to_string(k) + "]";
    mats.push_back(detail::matrix_at(vm[k], where));
    if (mats.back().rows() != mats.back().cols()) throw InputError(where + ": not square");
    if (mats.back().rows() != mats.front().rows())
      throw InputError(where + ": size differs from vertex_matrices[0]");
  }
  std::string name = root.value("name", std::string("model"));
  try {
    return build_matrix_polytope(std::move(mats), detail::facets_at(root, file), name);
  } catch (const Error& e) {
    throw InputError(file + ": " + e.what());
  }
}

/// dd2, dd3 or file:path.json
inline MatrixPolytopeModel resolve_model(const std::string& spec) {
  if (spec == "dd2") return dd_trace1_polytope(2);
  if (spec == "dd3") return dd_trace1_polytope(3);
  if (spec.rfind("file:", 0) == 0) {
    const std::string path = spec.substr(5);
    return model_from_json(parse_json(read_file(path), path), path);
  }
  throw InputError("--model: expected dd2, dd3 or file:<path>, got '" + spec + "'");
}

/// {"matrix": [[...]]}
inline Matrix matrix_from_json(const json& root, const std::string& file = "point") {
  if (!root.is_object() || !root.contains("matrix")) throw InputError(file + ": matrix: missing");
  return detail::matrix_at(root["matrix"], file + ": matrix");
}

/// Numeric CSV. A first line with any non-numeric cell is a header; blank
/// lines and lines starting with '#' are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable parse_csv(const std::string& text, const std::string& file = "csv") {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
      continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    std::vector<double> vals;
    bool numeric = true;
    for (auto& c : cells) {
      const auto b = c.find_first_not_of(" \t");
      const auto e = c.find_last_not_of(" \t");
      c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
      try {
        std::size_t used = 0;
        const double v = std::stod(c, &used);
        if (used != c.size()) numeric = false;
        vals.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (t.rows.empty() && t.header.empty()) {
        t.header = cells;
        continue;
      }
      throw InputError(file + ": line " + std::to_string(lineno) + ": non-numeric cell");
    }
    if (!t.rows.empty() && vals.size() != t.rows.front().size())
      throw InputError(file + ": line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.rows.front().size()) + " columns, got " +
                       std::to_string(vals.size()));
    for (double v : vals)
      if (!std::isfinite(v))
        throw InputError(file + ": line " + std::to_string(lineno) + ": value not finite");
    t.rows.push_back(std::move(vals));
  }
  if (t.rows.empty()) throw InputError(file + ": no data rows");
  return t;
}

inline Vector row_slice(const std::vector<double>& row, std::size_t from, std::size_t count) {
  Vector v(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) v(static_cast<Eigen::Index>(i)) = row[from + i];
  return v;
}

/// Splits each row into leading y columns and `value_cols` trailing values.
inline std::vector<std::pair<Vector, Vector>> split_rows(const CsvTable& t, std::size_t value_cols,
                                                         const std::string& file) {
  const std::size_t cols = t.rows.front().size();
  if (cols <= value_cols)
    throw InputError(file + ": expected at least one y column before " + std::to_string(value_cols) +
                     " value columns, got " + std::to_string(cols) + " columns");
  const std::size_t ycols = cols - value_cols;
  std::vector<std::pair<Vector, Vector>> out;
  for (const auto& r : t.rows) out.push_back({row_slice(r, 0, ycols), row_slice(r, ycols, value_cols)});
  return out;
}

/// Grid shape of row-major samples: 1-D for one y column; for two, the
/// number of leading rows sharing the first y value is the fast axis.
inline std::vector<int> infer_grid_shape(const std::vector<Vector>& ys, const std::string& file) {
  const auto total = ys.size();
  if (ys.front().size() == 1) return {static_cast<int>(total)};
  if (ys.front().size() != 2) throw InputError(file + ": grids must have 1 or 2 y columns");
  std::size_t cols = 0;
  while (cols < total && ys[cols](0) == ys.front()(0)) ++cols;
  if (cols == 0 || total % cols != 0)
    throw InputError(file + ": rows do not form a row-major grid");
  return {static_cast<int>(total / cols), static_cast<int>(cols)};
}

/// ISO-8601 UTC time; the only nondeterministic field of any report.
inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json header(const std::string& command, std::uint64_t seed) {
  return {{"tool", "sbary"},
          {"format_version", 1},
          {"command", command},
          {"seed", seed},
          {"generated_at", utc_timestamp()}};
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_json_atomic(const std::string& path, const json& doc) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / ("." + target.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InputError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot rename onto '" + path + "'");
  }
}

inline json to_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

inline json to_json(const Matrix& u) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < u.rows(); ++i) rows.push_back(to_json(Vector(u.row(i).transpose())));
  return rows;
}

inline json to_json(const CheckResult& c) {
  return {{"name", c.name},
          {"kind", c.bound ? "bound" : "identity"},
          {"worst", c.worst},
          {"tolerance", c.tolerance},
          {"passed", c.passed},
          {"detail", c.detail}};
}

inline json to_json(const VerificationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks.checks) checks.push_back(to_json(c));
  return {{"polytope", r.polytope}, {"samples", r.samples}, {"passed", r.passed()},
          {"checks", checks},       {"skipped", r.skipped}, {"errors", r.errors}};
}

inline json error_json(ErrorKind kind, const std::string& message) {
  return {{"kind", to_string(kind)}, {"message", message}};
}

}  // namespace sbary::io

#endif  // SBARY_TOOLS_IO_HPP_
