#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/execution.hpp"
#include "coldstart/models.hpp"
#include "coldstart/preprocess.hpp"
#include "coldstart/serialization.hpp"

namespace coldstart {

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // row -> fold id
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Seeded shuffle, then contiguous chunks; the first n % k folds get one extra row.
FoldPlan kfold_indices(std::size_t n, int k, std::uint64_t seed);

struct ParamGrid {
  std::vector<std::pair<std::string, std::vector<ParamValue>>> entries;

  std::size_t size() const;  // number of assignments in the product
  // Mixed-radix decode; the last entry varies fastest.
  ParamAssignment at(std::size_t index) const;
  void validate() const;
  Json to_json() const;
  static ParamGrid from_json(const Json& j);
};

// Default search spaces: boosting rounds/depth/rate, forest size/split/depth,
// a log-spaced alpha ladder for the linear family, depth/split for single trees.
ParamGrid default_grid(ModelFamily f);

enum class Scoring { kR2, kNegMape };
std::string_view to_string(Scoring s);
Scoring scoring_from_string(std::string_view s);
// Larger is better for both scorings.
double score_predictions(Scoring s, std::span<const double> y, std::span<const double> y_hat);

enum class TargetTransform { kNone, kLog1p };
std::string_view to_string(TargetTransform t);
TargetTransform target_transform_from_string(std::string_view s);
std::vector<double> forward_transform(TargetTransform t, std::span<const double> y);
std::vector<double> inverse_transform(TargetTransform t, std::span<const double> y);

// Scores `spec` on each fold of an already preprocessed matrix.
std::vector<double> cross_validate(const ModelSpec& spec, const FeatureMatrix& x,
                                   std::span<const double> y, const FoldPlan& plan, Scoring scoring,
                                   Execution exec = Execution::kParallel);

struct PipelineContext {
  PreprocessOptions preprocess;
  TargetTransform transform = TargetTransform::kNone;
};

struct PipelineCvResult {
  std::vector<double> scores;
  std::vector<Preprocessor> fold_preprocessors;  // fit on each training complement
};

// Cross-validation over raw features: each fold fits its own preprocessor on
// the training complement, fits on the transformed target, and scores the
// inverse-transformed predictions against the raw target.
PipelineCvResult cross_validate_pipeline(const ModelSpec& spec, const RawTable& features,
                                         const TargetVector& y, const FoldPlan& plan,
                                         Scoring scoring, const PipelineContext& context,
                                         Execution exec = Execution::kParallel);

struct SearchCandidate {
  ParamAssignment params;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct SearchResult {
  ModelFamily family = ModelFamily::kGbt;
  std::vector<SearchCandidate> candidates;  // in sampling order
  std::size_t best = 0;
  Scoring scoring = Scoring::kNegMape;
  std::uint64_t seed = 0;
  int k = 0;

  const SearchCandidate& winner() const { return candidates.at(best); }
  Json to_json() const;
};

// Indices of min(n_iter, grid.size()) distinct grid assignments, drawn
// uniformly without replacement.
std::vector<std::size_t> sample_grid_indices(const ParamGrid& grid, int n_iter, std::uint64_t seed);

// `base.params` are fixed overrides applied under every sampled assignment.
SearchResult randomized_search(const ModelSpec& base, const ParamGrid& grid, int n_iter,
                               const FeatureMatrix& x, std::span<const double> y, int k,
                               std::uint64_t seed, Scoring scoring,
                               Execution exec = Execution::kParallel);

SearchResult randomized_search_pipeline(const ModelSpec& base, const ParamGrid& grid, int n_iter,
                                        const RawTable& features, const TargetVector& y, int k,
                                        std::uint64_t seed, Scoring scoring,
                                        const PipelineContext& context,
                                        Execution exec = Execution::kParallel);

}  // namespace coldstart
