#include "coldstart/models.hpp"

#include <cmath>
#include <limits>

#include "coldstart/errors.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "models";

const ParamValue* lookup(const ParamAssignment& a, std::string_view name) {
  for (const auto& [k, v] : a) {
    if (k == name) return &v;
  }
  return nullptr;
}

double number(const ParamAssignment& a, std::string_view name) {
  const ParamValue* v = lookup(a, name);
  if (v == nullptr) throw InvariantError(kModule, "parameter '" + std::string(name) + "' unresolved");
  if (const auto* d = std::get_if<double>(v)) return *d;
  throw UsageError(kModule, "parameter '" + std::string(name) + "' must be numeric");
}

int whole(const ParamAssignment& a, std::string_view name) {
  const double v = number(a, name);
  if (std::floor(v) != v || std::abs(v) > 1e9) {
    throw UsageError(kModule, "parameter '" + std::string(name) + "' must be a whole number");
  }
  return static_cast<int>(v);
}

std::optional<int> depth(const ParamAssignment& a) {
  const ParamValue* v = lookup(a, "max_depth");
  if (v == nullptr) throw InvariantError(kModule, "parameter 'max_depth' unresolved");
  if (const auto* s = std::get_if<std::string>(v)) {
    if (*s == "unlimited") return std::nullopt;
    throw UsageError(kModule, "max_depth must be a positive integer or \"unlimited\"");
  }
  return whole(a, "max_depth");
}

MaxFeatures max_features(const ParamAssignment& a) {
  const ParamValue* v = lookup(a, "max_features");
  if (v == nullptr) throw InvariantError(kModule, "parameter 'max_features' unresolved");
  if (const auto* s = std::get_if<std::string>(v)) return max_features_from_string(*s);
  throw UsageError(kModule, "max_features must be all, third or sqrt");
}

ParamAssignment resolve(ModelFamily family, const ParamAssignment& overrides) {
  ParamAssignment params = default_params(family);
  for (const auto& [name, value] : overrides) {
    bool found = false;
    for (auto& [k, v] : params) {
      if (k == name) {
        v = value;
        found = true;
      }
    }
    if (!found) {
      throw UsageError(kModule, "unknown parameter '" + name + "' for " + std::string(to_string(family)));
    }
  }
  return params;
}

TreeParams tree_params(const ParamAssignment& a, std::uint64_t seed) {
  TreeParams p;
  p.max_depth = depth(a);
  p.min_samples_split = whole(a, "min_samples_split");
  p.max_features = max_features(a);
  p.seed = seed;
  p.validate();
  return p;
}

}  // namespace

std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::kDecisionTree: return "decision_tree";
    case ModelFamily::kRandomForest: return "random_forest";
    case ModelFamily::kGbt: return "gbt";
    case ModelFamily::kLasso: return "lasso";
    case ModelFamily::kRidge: return "ridge";
    case ModelFamily::kElasticNet: return "elastic_net";
  }
  return "unknown";
}

ModelFamily model_family_from_string(std::string_view s) {
  for (ModelFamily f : all_model_families()) {
    if (to_string(f) == s) return f;
  }
  throw UsageError(kModule, "unknown model family '" + std::string(s) + "'");
}

const std::vector<ModelFamily>& all_model_families() {
  static const std::vector<ModelFamily> kAll = {
      ModelFamily::kGbt,   ModelFamily::kRandomForest, ModelFamily::kLasso,
      ModelFamily::kRidge, ModelFamily::kElasticNet,   ModelFamily::kDecisionTree};
  return kAll;
}

bool is_tree_family(ModelFamily f) {
  return f == ModelFamily::kDecisionTree || f == ModelFamily::kRandomForest || f == ModelFamily::kGbt;
}

std::string format_param(const ParamValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return Json(std::get<double>(v)).dump();
}

Json param_to_json(const ParamValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

ParamValue param_from_json(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return j.get<double>();
  throw DataError(kModule, "parameter values must be numbers or strings");
}

Json assignment_to_json(const ParamAssignment& a) {
  Json j = Json::object();
  for (const auto& [k, v] : a) j[k] = param_to_json(v);
  return j;
}

ParamAssignment assignment_from_json(const Json& j) {
  ParamAssignment a;
  for (const auto& [k, v] : j.items()) a.emplace_back(k, param_from_json(v));
  return a;
}

ParamAssignment default_params(ModelFamily f) {
  using namespace std::string_literals;
  switch (f) {
    case ModelFamily::kDecisionTree:
      return {{"max_depth", "unlimited"s}, {"min_samples_split", 2.0}, {"max_features", "all"s}};
    case ModelFamily::kRandomForest:
      return {{"n_estimators", 1000.0},
              {"max_depth", 30.0},
              {"min_samples_split", 30.0},
              {"max_features", "third"s}};
    case ModelFamily::kGbt:
      return {{"rounds", 100.0},
              {"learning_rate", 0.5},
              {"max_depth", 3.0},
              {"min_samples_split", 2.0},
              {"max_features", "all"s}};
    case ModelFamily::kLasso: return {{"alpha", 1.0}, {"l1_ratio", 1.0}};
    case ModelFamily::kRidge: return {{"alpha", 1.0}, {"l1_ratio", 0.0}};
    case ModelFamily::kElasticNet: return {{"alpha", 1.0}, {"l1_ratio", 0.5}};
  }
  return {};
}

Model fit_model(const ModelSpec& spec, const FeatureMatrix& x, std::span<const double> y,
                Execution exec) {
  Model model;
  model.family = spec.family;
  model.params = resolve(spec.family, spec.params);
  const auto& a = model.params;
  switch (spec.family) {
    case ModelFamily::kDecisionTree:
      model.fitted = fit_decision_tree(x, y, tree_params(a, spec.seed));
      break;
    case ModelFamily::kRandomForest:
      model.fitted = fit_random_forest(x, y, tree_params(a, spec.seed), whole(a, "n_estimators"), exec);
      break;
    case ModelFamily::kGbt:
      model.fitted = fit_gbt(x, y, whole(a, "rounds"), number(a, "learning_rate"),
                             tree_params(a, spec.seed));
      break;
    case ModelFamily::kLasso:
    case ModelFamily::kRidge:
    case ModelFamily::kElasticNet: {
      LinearFitOptions options;
      options.tol = spec.linear_tol;
      options.max_iter = spec.linear_max_iter;
      model.fitted = fit_linear(x, y, number(a, "alpha"), number(a, "l1_ratio"), options);
      break;
    }
  }
  return model;
}

std::vector<double> predict(const Model& model, const FeatureMatrix& x) {
  return std::visit([&](const auto& m) { return predict(m, x); }, model.fitted);
}

Json model_to_json(const Model& model) {
  Json j;
  j["family"] = to_string(model.family);
  j["params"] = assignment_to_json(model.params);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          j["tree"] = m.to_json();
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          j["tree_params"] = tree_params_to_json(m.params);
          j["bootstrap"] = m.bootstrap;
          j["trees"] = Json::array();
          for (const auto& t : m.trees) j["trees"].push_back(t.to_json());
        } else if constexpr (std::is_same_v<T, GbtModel>) {
          j["tree_params"] = tree_params_to_json(m.params);
          j["base_prediction"] = m.base_prediction;
          j["learning_rate"] = m.learning_rate;
          j["stages"] = Json::array();
          for (const auto& t : m.stages) j["stages"].push_back(t.to_json());
        } else {
          j["linear"] = m.to_json();
        }
      },
      model.fitted);
  return j;
}

Model model_from_json(const Json& j, std::size_t n_features) {
  Model model;
  try {
    model.family = model_family_from_string(j.at("family").get<std::string>());
    model.params = assignment_from_json(j.at("params"));
    switch (model.family) {
      case ModelFamily::kDecisionTree:
        model.fitted = DecisionTree::from_json(j.at("tree"), n_features);
        break;
      case ModelFamily::kRandomForest: {
        ForestModel f;
        f.params = tree_params_from_json(j.at("tree_params"));
        f.bootstrap = j.at("bootstrap").get<bool>();
        for (const auto& t : j.at("trees")) f.trees.push_back(DecisionTree::from_json(t, n_features));
        f.n_estimators = static_cast<int>(f.trees.size());
        model.fitted = std::move(f);
        break;
      }
      case ModelFamily::kGbt: {
        GbtModel g;
        g.params = tree_params_from_json(j.at("tree_params"));
        g.base_prediction = j.at("base_prediction").get<double>();
        g.learning_rate = j.at("learning_rate").get<double>();
        for (const auto& t : j.at("stages")) g.stages.push_back(DecisionTree::from_json(t, n_features));
        model.fitted = std::move(g);
        break;
      }
      default: {
        auto linear = LinearModel::from_json(j.at("linear"));
        if (linear.coefficients.size() != n_features) {
          throw DataError(kModule, "linear model width does not match the preprocessor");
        }
        model.fitted = std::move(linear);
      }
    }
  } catch (const Json::exception& e) {
    throw DataError(kModule, std::string("malformed model block: ") + e.what());
  }
  return model;
}

}  // namespace coldstart
