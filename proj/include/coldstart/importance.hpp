#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/execution.hpp"
#include "coldstart/models.hpp"
#include "coldstart/serialization.hpp"

namespace coldstart {

struct FeatureImportance {
  std::string name;
  double score = 0.0;
  int rank = 0;  // 1 = most important
};

struct ImportanceReport {
  std::vector<FeatureImportance> features;  // feature order of the matrix
  bool degenerate = false;                  // no usable signal (e.g. a tree with no splits)

  // Entries sorted by rank.
  std::vector<FeatureImportance> ranked() const;
  int rank_of(std::string_view name) const;
  Json to_json() const;
};

// Assigns ranks by descending score; equal scores keep feature order.
ImportanceReport make_importance_report(std::vector<std::string> names, std::vector<double> scores);

enum class ImportanceMetric { kMape, kR2 };

using Predictor = std::function<std::vector<double>(const FeatureMatrix&)>;

// Mean over `repeats` of the metric change after shuffling one column,
// oriented so that larger means more important. The permutation for
// (feature j, repeat r) uses seed mix_seed(seed, j * repeats + r).
// `predictor` must be safe to call concurrently.
ImportanceReport permutation_importance(const Predictor& predictor, const FeatureMatrix& x,
                                        std::span<const double> y, ImportanceMetric metric,
                                        int repeats, std::uint64_t seed,
                                        Execution exec = Execution::kParallel);

// Sum of n_samples * impurity_decrease per feature over every split node,
// normalized to sum to 1. Throws for linear models.
ImportanceReport impurity_importance(const Model& model, std::vector<std::string> names);
ImportanceReport impurity_importance(std::span<const DecisionTree> trees,
                                     std::vector<std::string> names);

}  // namespace coldstart
