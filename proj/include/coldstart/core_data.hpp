#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace coldstart {

enum class ColumnRole { kNumeric, kCategorical, kDate, kPassthrough, kTarget, kId };

std::string_view to_string(ColumnRole role);
ColumnRole column_role_from_string(std::string_view name);

// Numeric, passthrough and target columns hold numbers; the rest hold text.
constexpr bool holds_numbers(ColumnRole role) noexcept {
  return role == ColumnRole::kNumeric || role == ColumnRole::kPassthrough ||
         role == ColumnRole::kTarget;
}

struct ColumnSchema {
  std::string name;
  ColumnRole role = ColumnRole::kNumeric;

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

// Cells are tri-state: a value or std::nullopt for missing.
using NumericCells = std::vector<std::optional<double>>;
using TextCells = std::vector<std::optional<std::string>>;

struct Column {
  ColumnSchema schema;
  std::variant<NumericCells, TextCells> cells;

  std::size_t size() const;
  const NumericCells& numbers() const;
  const TextCells& texts() const;
};

class RawTable {
 public:
  RawTable() = default;
  explicit RawTable(std::size_t n_rows) : n_rows_(n_rows) {}

  // Appends a column. The first column added to a default-constructed table
  // fixes n_rows; later columns must match it and names must be unique.
  void add_column(Column column);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_columns() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }

  const Column* find(std::string_view name) const;
  const Column& at(std::string_view name) const;

  std::vector<ColumnSchema> schema() const;

  RawTable select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<Column> columns_;
};

// Dense row-major matrix of finite reals with named columns.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_rows, std::vector<std::string> feature_names,
                std::vector<double> values);

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  std::span<const double> values() const noexcept { return values_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols(), cols());
  }

  std::vector<double> column(std::size_t c) const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix with_column(std::size_t c, std::span<const double> replacement) const;
  FeatureMatrix append_column(std::string name, std::span<const double> column) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// Video views per episode: finite and nonnegative.
class TargetVector {
 public:
  TargetVector() = default;
  explicit TargetVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  TargetVector select_rows(std::span<const std::size_t> rows) const;

 private:
  std::vector<double> values_;
};

struct Dataset {
  RawTable features;
  TargetVector target;
};

// Re-tags the table with `schema`, drops id and target columns and extracts
// the target in row order.
Dataset build_dataset(const RawTable& table, std::span<const ColumnSchema> schema);

struct HoldoutSplit {
  std::vector<std::size_t> train_rows;  // ascending
  std::vector<std::size_t> test_rows;   // ascending
  Dataset train;
  Dataset test;
};

// |test| = round-half-up(n * test_fraction), clamped to [1, n - 1].
std::size_t holdout_size(std::size_t n, double test_fraction);

HoldoutSplit split_holdout(const RawTable& features, const TargetVector& target,
                           double test_fraction, std::uint64_t seed);

}  // namespace coldstart
