#pragma once

// CSV emission and field import. Every table starts with one '#' comment
// line (config hash, tolerances, truncation diagnostics) and one header line.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfou/field.hpp"
#include "gfou/gauss.hpp"

namespace gfou::io {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

inline std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Round-trip representation: 17 significant digits, '.' decimal.
inline std::string fmt(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

/// Ordered key=value pairs rendered into the comment line.
class Meta {
 public:
  Meta& add(std::string key, std::string value) {
    items_.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  Meta& add(std::string key, double value) { return add(std::move(key), fmt(value)); }
  Meta& add(std::string key, bool value) { return add(std::move(key), std::string(value ? "true" : "false")); }
  Meta& add(std::string key, int value) { return add(std::move(key), std::to_string(value)); }

  std::string line() const {
    std::string out = "#";
    for (const auto& [k, v] : items_) out += " " + k + "=" + v;
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const Meta& meta, const std::vector<std::string>& columns) : os_(os), ncol_(columns.size()) {
    os_ << meta.line() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }

  void row(const std::vector<double>& v) {
    if (v.size() != ncol_) throw std::logic_error("CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << fmt(v[i]);
    os_ << "\n";
  }

  /// Leading string cell (an identifier) followed by numbers.
  void row(const std::string& id, const std::vector<double>& v) {
    if (v.size() + 1 != ncol_) throw std::logic_error("CsvWriter: row width does not match header");
    os_ << id;
    for (double x : v) os_ << "," << fmt(x);
    os_ << "\n";
  }

 private:
  std::ostream& os_;
  std::size_t ncol_;
};

/// Node coordinates and values; two columns in 1D, three in 2D.
inline void export_field_csv(const GridField& f, std::ostream& os, const Meta& meta = {}) {
  const bool two_d = f.grid().dim == 2;
  CsvWriter w(os, meta, two_d ? std::vector<std::string>{"x1", "x2", "value"} : std::vector<std::string>{"x1", "value"});
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point& p = f.grid().nodes[i];
    if (two_d) w.row({p.x1, p.x2, f[i]});
    else w.row({p.x1, f[i]});
  }
}

/// Nearest-node tolerance for imported fields.
inline constexpr double kNodeMatchTolerance = 1e-9;

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

inline double parse_number(const std::string& cell, std::size_t row) {
  std::istringstream is(cell);
  is.imbue(std::locale::classic());
  double v;
  is >> v;
  if (is.fail() || !(is >> std::ws).eof()) throw ConfigError("field CSV row " + std::to_string(row) + ": not a number: '" + cell + "'");
  return v;
}

}  // namespace detail

/// Reads a field exported by export_field_csv (or any CSV with the same
/// columns) and aligns it with the nodes of `grid`. Rows are numbered from 1
/// after the header; '#' lines are skipped.
inline GridField parse_field_csv(std::istream& in, std::shared_ptr<const Grid> grid) {
  const std::size_t width = grid->dim == 2 ? 3 : 2;
  std::vector<double> values(grid->size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<char> seen(grid->size(), 0);
  std::string line;
  bool header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++row;
    const auto cells = detail::split_csv(line);
    if (cells.size() != width)
      throw ConfigError("field CSV row " + std::to_string(row) + ": expected " + std::to_string(width) + " columns");
    Point p{detail::parse_number(cells[0], row), width == 3 ? detail::parse_number(cells[1], row) : 0.0};
    const double v = detail::parse_number(cells.back(), row);
    // Nodes are few enough (<= a few thousand) for a linear scan.
    std::size_t best = 0;
    double dist = kInf;
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const Point& q = grid->nodes[i];
      const double d = std::max(std::abs(q.x1 - p.x1), std::abs(q.x2 - p.x2));
      if (d < dist) {
        dist = d;
        best = i;
      }
    }
    if (!(dist <= kNodeMatchTolerance))
      throw ConfigError("field CSV row " + std::to_string(row) + ": no grid node within 1e-9 of (" + fmt(p.x1) +
                        (width == 3 ? ", " + fmt(p.x2) : std::string()) + ")");
    if (seen[best]) throw ConfigError("field CSV row " + std::to_string(row) + ": node listed twice");
    seen[best] = 1;
    values[best] = v;
  }
  if (row == 0) throw ConfigError("field CSV is empty: no data rows");
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw ConfigError("field CSV does not cover grid node " + std::to_string(i + 1) + " (x1 = " + fmt(grid->nodes[i].x1) + ")");
  return GridField(std::move(grid), std::move(values), "csv");
}

inline GridField load_field_csv(const std::filesystem::path& path, std::shared_ptr<const Grid> grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field CSV " + path.string());
  return parse_field_csv(in, std::move(grid));
}

}  // namespace gfou::io
