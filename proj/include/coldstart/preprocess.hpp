#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/serialization.hpp"

namespace coldstart {

enum class NumericImpute { kMean, kMedian };
enum class CategoricalImpute { kMode, kSentinel };

std::string_view to_string(NumericImpute s);
std::string_view to_string(CategoricalImpute s);
NumericImpute numeric_impute_from_string(std::string_view s);
CategoricalImpute categorical_impute_from_string(std::string_view s);

inline constexpr std::string_view kMissingCategory = "__missing__";

struct NumericColumnState {
  std::string name;
  double impute_value = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population std after imputation; 0 means "divide by 1"
};

struct CategoricalColumnState {
  std::string name;
  std::string impute_category;
  std::vector<std::string> categories;  // sorted, unique
};

struct PreprocessOptions {
  NumericImpute numeric = NumericImpute::kMedian;
  CategoricalImpute categorical = CategoricalImpute::kMode;
};

// Fitted impute + standardize + one-hot state. Output layout is
// [numerics in schema order, one-hot blocks in schema order, passthroughs].
// Date-role columns are not modeled directly and are ignored.
class Preprocessor {
 public:
  Preprocessor() = default;

  bool fitted() const noexcept { return fitted_; }
  const std::vector<NumericColumnState>& numeric() const noexcept { return numeric_; }
  const std::vector<CategoricalColumnState>& categorical() const noexcept { return categorical_; }
  const std::vector<std::string>& passthrough() const noexcept { return passthrough_; }
  std::vector<std::string> feature_names() const;

  FeatureMatrix transform(const RawTable& features) const;

  Json to_json() const;
  static Preprocessor from_json(const Json& j);

  friend Preprocessor fit_preprocessor(const RawTable&, const PreprocessOptions&);

 private:
  bool fitted_ = false;
  PreprocessOptions options_;
  std::vector<NumericColumnState> numeric_;
  std::vector<CategoricalColumnState> categorical_;
  std::vector<std::string> passthrough_;
};

Preprocessor fit_preprocessor(const RawTable& features, const PreprocessOptions& options = {});

inline FeatureMatrix transform(const Preprocessor& p, const RawTable& features) {
  return p.transform(features);
}

}  // namespace coldstart
