#include "coldstart/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coldstart/errors.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "preprocess";

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

const Column& require_column(const RawTable& t, const std::string& name, ColumnRole role) {
  const Column* c = t.find(name);
  if (c == nullptr) throw DataError(kModule, "input is missing fitted column '" + name + "'");
  if (c->schema.role != role) {
    throw DataError(kModule, "column '" + name + "' has role " + std::string(to_string(c->schema.role)) +
                                 ", fitted as " + std::string(to_string(role)));
  }
  return *c;
}

}  // namespace

std::string_view to_string(NumericImpute s) { return s == NumericImpute::kMean ? "mean" : "median"; }
std::string_view to_string(CategoricalImpute s) {
  return s == CategoricalImpute::kMode ? "mode" : "sentinel";
}

NumericImpute numeric_impute_from_string(std::string_view s) {
  if (s == "mean") return NumericImpute::kMean;
  if (s == "median") return NumericImpute::kMedian;
  throw UsageError(kModule, "numeric imputation must be mean or median, got '" + std::string(s) + "'");
}

CategoricalImpute categorical_impute_from_string(std::string_view s) {
  if (s == "mode") return CategoricalImpute::kMode;
  if (s == "sentinel") return CategoricalImpute::kSentinel;
  throw UsageError(kModule,
                   "categorical imputation must be mode or sentinel, got '" + std::string(s) + "'");
}

Preprocessor fit_preprocessor(const RawTable& features, const PreprocessOptions& options) {
  if (features.n_rows() == 0) throw DataError(kModule, "cannot fit on an empty table");
  Preprocessor p;
  p.options_ = options;
  const double n = static_cast<double>(features.n_rows());

  for (const auto& col : features.columns()) {
    switch (col.schema.role) {
      case ColumnRole::kNumeric: {
        std::vector<double> present;
        for (const auto& cell : col.numbers()) {
          if (cell) present.push_back(*cell);
        }
        if (present.empty()) {
          throw DataError(kModule, "numeric column '" + col.schema.name + "' has no values");
        }
        NumericColumnState s{col.schema.name, 0.0, 0.0, 0.0};
        if (options.numeric == NumericImpute::kMean) {
          double sum = 0.0;
          for (double v : present) sum += v;
          s.impute_value = sum / static_cast<double>(present.size());
        } else {
          s.impute_value = median_of(present);
        }
        double sum = 0.0;
        for (const auto& cell : col.numbers()) sum += cell.value_or(s.impute_value);
        s.mean = sum / n;
        double ss = 0.0;
        for (const auto& cell : col.numbers()) {
          const double d = cell.value_or(s.impute_value) - s.mean;
          ss += d * d;
        }
        s.std = std::sqrt(ss / n);
        p.numeric_.push_back(std::move(s));
        break;
      }
      case ColumnRole::kCategorical: {
        std::map<std::string, std::size_t> counts;
        std::size_t n_missing = 0;
        for (const auto& cell : col.texts()) {
          if (cell) {
            ++counts[*cell];
          } else {
            ++n_missing;
          }
        }
        // The sentinel gets its own indicator column when fit data has gaps.
        if (options.categorical == CategoricalImpute::kSentinel && n_missing > 0) {
          counts[std::string(kMissingCategory)] += n_missing;
        }
        CategoricalColumnState s;
        s.name = col.schema.name;
        for (const auto& [value, count] : counts) s.categories.push_back(value);
        s.impute_category = std::string(kMissingCategory);
        if (options.categorical == CategoricalImpute::kMode) {
          std::size_t best = 0;
          // std::map iterates lexicographically, so strict > keeps the smallest on ties.
          for (const auto& [value, count] : counts) {
            if (count > best) {
              best = count;
              s.impute_category = value;
            }
          }
        }
        p.categorical_.push_back(std::move(s));
        break;
      }
      case ColumnRole::kPassthrough:
        p.passthrough_.push_back(col.schema.name);
        break;
      case ColumnRole::kDate:
      case ColumnRole::kId:
      case ColumnRole::kTarget:
        break;
    }
  }
  p.fitted_ = true;
  return p;
}

std::vector<std::string> Preprocessor::feature_names() const {
  std::vector<std::string> names;
  for (const auto& s : numeric_) names.push_back(s.name);
  for (const auto& s : categorical_) {
    for (const auto& c : s.categories) names.push_back(s.name + "=" + c);
  }
  for (const auto& s : passthrough_) names.push_back(s);
  return names;
}

FeatureMatrix Preprocessor::transform(const RawTable& features) const {
  if (!fitted_) throw UsageError(kModule, "transform called on an unfitted preprocessor");
  auto names = feature_names();
  const std::size_t n = features.n_rows();
  const std::size_t width = names.size();
  std::vector<double> values(n * width, 0.0);

  std::size_t offset = 0;
  for (const auto& s : numeric_) {
    const auto& cells = require_column(features, s.name, ColumnRole::kNumeric).numbers();
    const double divisor = s.std > 0.0 ? s.std : 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      values[r * width + offset] = (cells[r].value_or(s.impute_value) - s.mean) / divisor;
    }
    ++offset;
  }
  for (const auto& s : categorical_) {
    const auto& cells = require_column(features, s.name, ColumnRole::kCategorical).texts();
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& value = cells[r] ? *cells[r] : s.impute_category;
      const auto it = std::lower_bound(s.categories.begin(), s.categories.end(), value);
      if (it != s.categories.end() && *it == value) {
        values[r * width + offset + static_cast<std::size_t>(it - s.categories.begin())] = 1.0;
      }
    }
    offset += s.categories.size();
  }
  for (const auto& name : passthrough_) {
    const auto& cells = require_column(features, name, ColumnRole::kPassthrough).numbers();
    for (std::size_t r = 0; r < n; ++r) {
      if (!cells[r]) {
        throw DataError(kModule, "passthrough column '" + name + "' is missing at row " +
                                     std::to_string(r));
      }
      values[r * width + offset] = *cells[r];
    }
    ++offset;
  }
  return FeatureMatrix(n, std::move(names), std::move(values));
}

Json Preprocessor::to_json() const {
  Json j;
  j["numeric_impute"] = to_string(options_.numeric);
  j["categorical_impute"] = to_string(options_.categorical);
  j["numeric"] = Json::array();
  for (const auto& s : numeric_) {
    j["numeric"].push_back(
        {{"name", s.name}, {"impute_value", s.impute_value}, {"mean", s.mean}, {"std", s.std}});
  }
  j["categorical"] = Json::array();
  for (const auto& s : categorical_) {
    j["categorical"].push_back(
        {{"name", s.name}, {"impute_category", s.impute_category}, {"categories", s.categories}});
  }
  j["passthrough"] = passthrough_;
  return j;
}

Preprocessor Preprocessor::from_json(const Json& j) {
  Preprocessor p;
  try {
    p.options_.numeric = numeric_impute_from_string(j.at("numeric_impute").get<std::string>());
    p.options_.categorical = categorical_impute_from_string(j.at("categorical_impute").get<std::string>());
    for (const auto& s : j.at("numeric")) {
      p.numeric_.push_back({s.at("name").get<std::string>(), s.at("impute_value").get<double>(),
                            s.at("mean").get<double>(), s.at("std").get<double>()});
    }
    for (const auto& s : j.at("categorical")) {
      p.categorical_.push_back({s.at("name").get<std::string>(),
                                s.at("impute_category").get<std::string>(),
                                s.at("categories").get<std::vector<std::string>>()});
    }
    p.passthrough_ = j.at("passthrough").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw DataError(kModule, std::string("malformed preprocessor block: ") + e.what());
  }
  p.fitted_ = true;
  return p;
}

}  // namespace coldstart
