#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace trapdoor {

enum class ColumnKind { Binary, Ordinal, Continuous, Positive, UnitInterval };

const char* to_string(ColumnKind kind) noexcept;

struct ColumnType {
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<int> levels;  // discrete kinds only, ascending

  static ColumnType binary() { return {ColumnKind::Binary, {0, 1}}; }
  static ColumnType ordinal(std::vector<int> levels) { return {ColumnKind::Ordinal, std::move(levels)}; }
  static ColumnType continuous() { return {ColumnKind::Continuous, {}}; }
  static ColumnType positive() { return {ColumnKind::Positive, {}}; }
  static ColumnType unit_interval() { return {ColumnKind::UnitInterval, {}}; }

  bool discrete() const noexcept { return kind == ColumnKind::Binary || kind == ColumnKind::Ordinal; }
  bool admits(double v) const;

  friend bool operator==(const ColumnType&, const ColumnType&) = default;
};

/// Column-major table of complete observations.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> names, std::vector<ColumnType> types,
          std::vector<std::vector<double>> columns);

  std::size_t rows() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
  std::size_t cols() const noexcept { return names_.size(); }

  const std::vector<std::string>& names() const noexcept { return names_; }
  bool has_column(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const { return columns_[index_of(name)]; }
  const std::vector<double>& column(std::size_t i) const { return columns_[i]; }
  const ColumnType& type(std::string_view name) const { return types_[index_of(name)]; }
  const ColumnType& type(std::size_t i) const { return types_[i]; }

  /// Header row, then one line per observation. Discrete columns are written
  /// as integers, everything else with round-trip precision.
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;

  /// Column types are inferred: integer columns over {0,1} are binary, other
  /// integer columns with at most 10 distinct values ordinal, then unit
  /// interval, positive, continuous in that order.
  static Dataset read_csv(std::istream& in);
  static Dataset from_csv(std::string_view text);

 private:
  std::vector<std::string> names_;
  std::vector<ColumnType> types_;
  std::vector<std::vector<double>> columns_;
};

/// Shortest round-trip formatting shared by every CSV/JSON writer.
std::string format_double(double v);

}  // namespace trapdoor
