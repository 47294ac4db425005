#include "trapdoor/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <set>
#include <sstream>

#include "trapdoor/error.hpp"

namespace trapdoor {

const char* to_string(ColumnKind kind) noexcept {
  switch (kind) {
    case ColumnKind::Binary: return "binary";
    case ColumnKind::Ordinal: return "ordinal";
    case ColumnKind::Continuous: return "continuous";
    case ColumnKind::Positive: return "positive";
    case ColumnKind::UnitInterval: return "unit-interval";
  }
  return "unknown";
}

std::string format_double(double v) {
  // shortest text that reads back to the same double
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool ColumnType::admits(double v) const {
  if (!std::isfinite(v)) return false;
  switch (kind) {
    case ColumnKind::Binary:
    case ColumnKind::Ordinal:
      return std::find(levels.begin(), levels.end(), static_cast<int>(v)) != levels.end() &&
             static_cast<double>(static_cast<int>(v)) == v;
    case ColumnKind::Continuous: return true;
    case ColumnKind::Positive: return v > 0;
    case ColumnKind::UnitInterval: return v > 0 && v < 1;
  }
  return false;
}

Dataset::Dataset(std::vector<std::string> names, std::vector<ColumnType> types,
                 std::vector<std::vector<double>> columns)
    : names_(std::move(names)), types_(std::move(types)), columns_(std::move(columns)) {
  if (names_.size() != types_.size() || names_.size() != columns_.size()) {
    fail(ErrorKind::Input, "dataset: names, types and columns differ in length");
  }
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) fail(ErrorKind::Input, "dataset: duplicate column name");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].size() != columns_.front().size()) {
      fail(ErrorKind::Input, "dataset: column '" + names_[c] + "' has a different length");
    }
    for (double v : columns_[c]) {
      if (!types_[c].admits(v)) {
        fail(ErrorKind::Input, "dataset: value " + format_double(v) + " not admissible in " +
                                   to_string(types_[c].kind) + " column '" + names_[c] + "'");
      }
    }
  }
}

bool Dataset::has_column(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Dataset::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) fail(ErrorKind::Input, "dataset has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

void Dataset::write_csv(std::ostream& out) const {
  for (std::size_t c = 0; c < names_.size(); ++c) out << (c ? "," : "") << names_[c];
  out << '\n';
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < names_.size(); ++c) {
      if (c) out << ',';
      const double v = columns_[c][r];
      if (types_[c].discrete()) {
        out << static_cast<int>(v);
      } else {
        out << format_double(v);
      }
    }
    out << '\n';
  }
}

std::string Dataset::to_csv() const {
  std::ostringstream out;
  write_csv(out);
  return out.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorKind::Input, "csv line " + std::to_string(line) + ": cannot parse '" + s + "'");
  }
  return v;
}

ColumnType infer(const std::vector<double>& col) {
  std::set<double> distinct;
  bool integral = true;
  bool unit = true;
  bool positive = true;
  for (double v : col) {
    if (v != std::floor(v)) integral = false;
    if (!(v > 0 && v < 1)) unit = false;
    if (!(v > 0)) positive = false;
    if (distinct.size() <= 10) distinct.insert(v);
  }
  if (integral && distinct.size() <= 10 && !col.empty()) {
    if (std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 0 || v == 1; })) {
      return ColumnType::binary();
    }
    std::vector<int> levels;
    for (double v : distinct) levels.push_back(static_cast<int>(v));
    return ColumnType::ordinal(std::move(levels));
  }
  if (unit) return ColumnType::unit_interval();
  if (positive) return ColumnType::positive();
  return ColumnType::continuous();
}

}  // namespace

Dataset Dataset::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Input, "csv: missing header row");
  auto names = split(line);
  if (names.empty()) fail(ErrorKind::Input, "csv: empty header row");
  std::vector<std::vector<double>> columns(names.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != names.size()) {
      fail(ErrorKind::Input, "csv line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(names.size()) + " fields");
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty() || fields[c] == "NA") {
        fail(ErrorKind::Input, "csv line " + std::to_string(lineno) + ": missing value");
      }
      columns[c].push_back(parse_number(fields[c], lineno));
    }
  }
  std::vector<ColumnType> types;
  for (const auto& col : columns) types.push_back(infer(col));
  return Dataset(std::move(names), std::move(types), std::move(columns));
}

Dataset Dataset::from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_csv(in);
}

}  // namespace trapdoor
