#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/execution.hpp"
#include "coldstart/serialization.hpp"

namespace coldstart {

enum class MaxFeatures { kAll, kThird, kSqrt };

std::string_view to_string(MaxFeatures m);
MaxFeatures max_features_from_string(std::string_view s);

// Number of candidate features examined per node for p total features.
std::size_t features_per_node(MaxFeatures m, std::size_t p);

struct TreeParams {
  std::optional<int> max_depth;  // nullopt = unlimited
  int min_samples_split = 2;
  MaxFeatures max_features = MaxFeatures::kAll;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

// Variance-reduction split search. Candidate thresholds are midpoints of
// consecutive distinct values; rows with x <= threshold go left. Ties on the
// decrease (within a relative 1e-12 of the parent variance) keep the lowest
// feature index, then the lowest threshold.
std::optional<SplitCandidate> best_split(const FeatureMatrix& x, std::span<const double> y,
                                         std::span<const std::size_t> feature_subset);

// Same search restricted to `rows` (which may repeat, as in a bootstrap sample).
std::optional<SplitCandidate> best_split_rows(const FeatureMatrix& x, std::span<const double> y,
                                              std::span<const std::size_t> rows,
                                              std::span<const std::size_t> feature_subset);

// Relative tolerance used to call two impurity decreases equal.
inline constexpr double kSplitTieTolerance = 1e-12;

// Flat node storage; node 0 is the root. Leaves have feature == kLeaf.
struct TreeNode {
  static constexpr int kLeaf = -1;

  int feature = kLeaf;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean training target of the node
  double impurity_decrease = 0.0;
  std::size_t n_samples = 0;

  bool is_leaf() const noexcept { return feature == kLeaf; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t depth() const;
  std::size_t n_leaves() const;

  double predict_row(std::span<const double> row) const;
  // Index of the leaf reached by `row`.
  std::size_t leaf_index(std::span<const double> row) const;

  Json to_json() const;
  static DecisionTree from_json(const Json& j, std::size_t n_features);

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

DecisionTree fit_decision_tree(const FeatureMatrix& x, std::span<const double> y,
                               const TreeParams& params);
DecisionTree fit_decision_tree_rows(const FeatureMatrix& x, std::span<const double> y,
                                    std::span<const std::size_t> rows, const TreeParams& params);

struct ForestModel {
  std::vector<DecisionTree> trees;
  TreeParams params;
  int n_estimators = 0;
  bool bootstrap = true;
};

// Tree i is fit on a bootstrap sample drawn with seed mix_seed(params.seed, i)
// and grown with that same derived seed for per-node feature sampling.
ForestModel fit_random_forest(const FeatureMatrix& x, std::span<const double> y,
                              const TreeParams& params, int n_estimators,
                              Execution exec = Execution::kParallel, bool bootstrap = true);

struct GbtModel {
  double base_prediction = 0.0;
  std::vector<DecisionTree> stages;
  double learning_rate = 0.5;
  TreeParams params;
};

// Squared-error gradient boosting: each round fits a tree to the current
// residuals and adds it scaled by learning_rate. rounds == 0 is allowed.
GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y, int rounds,
                 double learning_rate, const TreeParams& params);

std::vector<double> predict(const DecisionTree& tree, const FeatureMatrix& x);
std::vector<double> predict(const ForestModel& forest, const FeatureMatrix& x,
                            Execution exec = Execution::kParallel);
std::vector<double> predict(const GbtModel& model, const FeatureMatrix& x);
// Prediction using only the first `n_stages` boosting stages.
std::vector<double> predict_staged(const GbtModel& model, const FeatureMatrix& x,
                                   std::size_t n_stages);

Json tree_params_to_json(const TreeParams& p);
TreeParams tree_params_from_json(const Json& j);

}  // namespace coldstart
