#include "coldstart/core_data.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "coldstart/errors.hpp"
#include "coldstart/random.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "core_data";

template <typename Cells>
Cells pick(const Cells& cells, std::span<const std::size_t> rows) {
  Cells out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(cells.at(r));
  return out;
}

}  // namespace

std::string_view to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::kNumeric: return "numeric";
    case ColumnRole::kCategorical: return "categorical";
    case ColumnRole::kDate: return "date";
    case ColumnRole::kPassthrough: return "passthrough";
    case ColumnRole::kTarget: return "target";
    case ColumnRole::kId: return "id";
  }
  return "unknown";
}

ColumnRole column_role_from_string(std::string_view name) {
  for (ColumnRole r : {ColumnRole::kNumeric, ColumnRole::kCategorical, ColumnRole::kDate,
                       ColumnRole::kPassthrough, ColumnRole::kTarget, ColumnRole::kId}) {
    if (to_string(r) == name) return r;
  }
  throw DataError(kModule, "unknown column role '" + std::string(name) + "'");
}

std::size_t Column::size() const {
  return std::visit([](const auto& c) { return c.size(); }, cells);
}

const NumericCells& Column::numbers() const {
  if (const auto* p = std::get_if<NumericCells>(&cells)) return *p;
  throw InvariantError(kModule, "column '" + schema.name + "' does not hold numbers");
}

const TextCells& Column::texts() const {
  if (const auto* p = std::get_if<TextCells>(&cells)) return *p;
  throw InvariantError(kModule, "column '" + schema.name + "' does not hold text");
}

void RawTable::add_column(Column column) {
  if (columns_.empty() && n_rows_ == 0) n_rows_ = column.size();
  if (column.size() != n_rows_) {
    throw DataError(kModule, "column '" + column.schema.name + "' has " +
                                 std::to_string(column.size()) + " cells, expected " +
                                 std::to_string(n_rows_));
  }
  if (find(column.schema.name) != nullptr) {
    throw DataError(kModule, "duplicate column name '" + column.schema.name + "'");
  }
  if (holds_numbers(column.schema.role) != std::holds_alternative<NumericCells>(column.cells)) {
    throw DataError(kModule, "column '" + column.schema.name + "' cell type does not match role " +
                                 std::string(to_string(column.schema.role)));
  }
  columns_.push_back(std::move(column));
}

const Column* RawTable::find(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.schema.name == name) return &c;
  }
  return nullptr;
}

const Column& RawTable::at(std::string_view name) const {
  if (const Column* c = find(name)) return *c;
  throw DataError(kModule, "missing column '" + std::string(name) + "'");
}

std::vector<ColumnSchema> RawTable::schema() const {
  std::vector<ColumnSchema> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.schema);
  return out;
}

RawTable RawTable::select_rows(std::span<const std::size_t> rows) const {
  RawTable out(rows.size());
  for (const auto& c : columns_) {
    Column copy{c.schema, {}};
    copy.cells = std::visit([&](const auto& cells) -> decltype(Column::cells) {
      return pick(cells, rows);
    }, c.cells);
    out.columns_.push_back(std::move(copy));
  }
  return out;
}

FeatureMatrix::FeatureMatrix(std::size_t n_rows, std::vector<std::string> feature_names,
                             std::vector<double> values)
    : n_rows_(n_rows), names_(std::move(feature_names)), values_(std::move(values)) {
  if (values_.size() != n_rows_ * names_.size()) {
    throw InvariantError(kModule, "feature matrix size does not equal rows x names");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvariantError(kModule, "non-finite value in feature '" +
                                        names_[i % names_.size()] + "' row " +
                                        std::to_string(i / names_.size()));
    }
  }
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(n_rows_);
  for (std::size_t r = 0; r < n_rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size() * cols());
  for (std::size_t r : rows) {
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return FeatureMatrix(rows.size(), names_, std::move(out));
}

FeatureMatrix FeatureMatrix::with_column(std::size_t c, std::span<const double> replacement) const {
  if (replacement.size() != n_rows_ || c >= cols()) {
    throw InvariantError(kModule, "column replacement has wrong shape");
  }
  FeatureMatrix out = *this;
  for (std::size_t r = 0; r < n_rows_; ++r) out.values_[r * cols() + c] = replacement[r];
  return out;
}

FeatureMatrix FeatureMatrix::append_column(std::string name, std::span<const double> column) const {
  if (column.size() != n_rows_) throw InvariantError(kModule, "appended column has wrong length");
  std::vector<std::string> names = names_;
  names.push_back(std::move(name));
  std::vector<double> values;
  values.reserve(n_rows_ * names.size());
  for (std::size_t r = 0; r < n_rows_; ++r) {
    auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
    values.push_back(column[r]);
  }
  return FeatureMatrix(n_rows_, std::move(names), std::move(values));
}

TargetVector::TargetVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw DataError(kModule, "target row " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

TargetVector TargetVector::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(values_.at(r));
  return TargetVector(std::move(out));
}

Dataset build_dataset(const RawTable& table, std::span<const ColumnSchema> schema) {
  std::unordered_set<std::string> names;
  std::size_t n_target = 0;
  for (const auto& s : schema) {
    if (!names.insert(s.name).second) {
      throw DataError(kModule, "schema lists column '" + s.name + "' twice");
    }
    if (s.role == ColumnRole::kTarget) ++n_target;
  }
  if (n_target != 1) {
    throw DataError(kModule, "schema must contain exactly one target column, found " +
                                 std::to_string(n_target));
  }
  for (const auto& c : table.columns()) {
    if (!names.contains(c.schema.name)) {
      throw DataError(kModule, "table column '" + c.schema.name + "' is not covered by the schema");
    }
  }

  Dataset out;
  out.features = RawTable(table.n_rows());
  bool have_target = false;
  for (const auto& s : schema) {
    const Column* c = table.find(s.name);
    if (c == nullptr) {
      if (s.role == ColumnRole::kTarget) {
        throw DataError(kModule, "target column '" + s.name + "' is missing");
      }
      throw DataError(kModule, "schema column '" + s.name + "' is missing from the table");
    }
    if (holds_numbers(s.role) != std::holds_alternative<NumericCells>(c->cells)) {
      throw DataError(kModule, "column '" + s.name + "' cell type does not match role " +
                                   std::string(to_string(s.role)));
    }
    if (s.role == ColumnRole::kTarget) {
      const auto& cells = c->numbers();
      std::vector<double> y;
      y.reserve(cells.size());
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i]) {
          throw DataError(kModule, "target '" + s.name + "' is missing at row " + std::to_string(i));
        }
        if (*cells[i] < 0.0) {
          throw DataError(kModule, "target '" + s.name + "' is negative at row " + std::to_string(i));
        }
        y.push_back(*cells[i]);
      }
      out.target = TargetVector(std::move(y));
      have_target = true;
    } else if (s.role != ColumnRole::kId) {
      out.features.add_column(Column{s, c->cells});
    }
  }
  if (!have_target) throw DataError(kModule, "target column missing");
  return out;
}

std::size_t holdout_size(std::size_t n, double test_fraction) {
  if (n < 2) throw DataError(kModule, "holdout split needs at least 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError(kModule, "test_fraction must lie strictly between 0 and 1");
  }
  const auto raw = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 0.5));
  return std::clamp<std::size_t>(raw, 1, n - 1);
}

HoldoutSplit split_holdout(const RawTable& features, const TargetVector& target,
                           double test_fraction, std::uint64_t seed) {
  const std::size_t n = features.n_rows();
  if (target.size() != n) throw DataError(kModule, "features and target differ in length");
  const std::size_t n_test = holdout_size(n, test_fraction);

  const auto perm = seeded_permutation(n, seed);
  HoldoutSplit out;
  out.test_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());

  out.train = Dataset{features.select_rows(out.train_rows), target.select_rows(out.train_rows)};
  out.test = Dataset{features.select_rows(out.test_rows), target.select_rows(out.test_rows)};
  return out;
}

}  // namespace coldstart
