#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/execution.hpp"
#include "coldstart/linear.hpp"
#include "coldstart/serialization.hpp"
#include "coldstart/tree.hpp"

namespace coldstart {

enum class ModelFamily { kDecisionTree, kRandomForest, kGbt, kLasso, kRidge, kElasticNet };

std::string_view to_string(ModelFamily f);
ModelFamily model_family_from_string(std::string_view s);
const std::vector<ModelFamily>& all_model_families();
bool is_tree_family(ModelFamily f);

// A hyperparameter value: numbers, or labels such as "unlimited" / "third".
using ParamValue = std::variant<double, std::string>;
// Ordered (name, value) pairs.
using ParamAssignment = std::vector<std::pair<std::string, ParamValue>>;

std::string format_param(const ParamValue& v);
Json param_to_json(const ParamValue& v);
ParamValue param_from_json(const Json& j);
Json assignment_to_json(const ParamAssignment& a);
ParamAssignment assignment_from_json(const Json& j);

struct ModelSpec {
  ModelFamily family = ModelFamily::kGbt;
  ParamAssignment params;  // unspecified names fall back to family defaults
  std::uint64_t seed = 42;
  double linear_tol = 1e-6;
  int linear_max_iter = 10000;
};

// Family defaults: forest 1000 trees / min split 30 / depth 30, boosting at
// learning rate 0.5, l1_ratio 1 / 0 / 0.5 for lasso / ridge / elastic net.
ParamAssignment default_params(ModelFamily f);

using FittedModel = std::variant<DecisionTree, ForestModel, GbtModel, LinearModel>;

struct Model {
  ModelFamily family = ModelFamily::kGbt;
  ParamAssignment params;  // fully resolved
  FittedModel fitted;
};

Model fit_model(const ModelSpec& spec, const FeatureMatrix& x, std::span<const double> y,
                Execution exec = Execution::kParallel);

std::vector<double> predict(const Model& model, const FeatureMatrix& x);

Json model_to_json(const Model& model);
Model model_from_json(const Json& j, std::size_t n_features);

}  // namespace coldstart
