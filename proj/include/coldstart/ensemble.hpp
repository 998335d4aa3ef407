#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/execution.hpp"
#include "coldstart/models.hpp"
#include "coldstart/preprocess.hpp"
#include "coldstart/serialization.hpp"
#include "coldstart/tuning.hpp"

namespace coldstart {

enum class WeightScheme { kInverseError, kEqual };
std::string_view to_string(WeightScheme s);
WeightScheme weight_scheme_from_string(std::string_view s);

// Indices of the k smallest errors, ascending; ties keep submission order.
// k is clamped to the number of candidates.
std::vector<std::size_t> select_top_models(std::span<const double> validation_mape, std::size_t k = 3);

// inverse_error: w_i = (1/e_i) / sum_j (1/e_j); equal: w_i = 1/m.
// Throws DataError for a nonpositive error under inverse_error.
std::vector<double> compute_weights(std::span<const double> validation_errors, WeightScheme scheme);

// compute_weights, except that zero errors under inverse_error split the
// whole weight equally among the zero-error members.
std::vector<double> compute_weights_or_fallback(std::span<const double> validation_errors,
                                                WeightScheme scheme);

// sum_i w_i * predictions[i], elementwise.
std::vector<double> weighted_average(std::span<const std::vector<double>> member_predictions,
                                     std::span<const double> weights);

struct ScoredModel {
  Model model;
  double validation_mape = 0.0;
  double validation_smape = 0.0;
};

struct EnsembleMember {
  Model model;
  double validation_mape = 0.0;
  double validation_smape = 0.0;
  double weight = 0.0;
};

struct EnsembleBundle {
  std::vector<EnsembleMember> members;  // ascending validation_mape
  Preprocessor preprocessor;
  WeightScheme scheme = WeightScheme::kInverseError;
  TargetTransform target_transform = TargetTransform::kNone;

  std::vector<double> weights() const;
  void check_invariants() const;
};

EnsembleBundle build_ensemble(std::vector<ScoredModel> candidates, Preprocessor preprocessor,
                              WeightScheme scheme, TargetTransform transform, std::size_t k = 3);

// Predictions of every member on the original target scale.
std::vector<std::vector<double>> member_predictions(const EnsembleBundle& bundle,
                                                    const FeatureMatrix& x,
                                                    Execution exec = Execution::kParallel);

std::vector<double> ensemble_predict(const EnsembleBundle& bundle, const FeatureMatrix& x,
                                     Execution exec = Execution::kParallel);

}  // namespace coldstart
