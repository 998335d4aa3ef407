#include "coldstart/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "coldstart/errors.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "ensemble";

}  // namespace

std::string_view to_string(WeightScheme s) {
  return s == WeightScheme::kInverseError ? "inverse_error" : "equal";
}

WeightScheme weight_scheme_from_string(std::string_view s) {
  if (s == "inverse_error") return WeightScheme::kInverseError;
  if (s == "equal") return WeightScheme::kEqual;
  throw UsageError(kModule, "ensemble scheme must be inverse_error or equal, got '" + std::string(s) + "'");
}

std::vector<std::size_t> select_top_models(std::span<const double> validation_mape, std::size_t k) {
  if (validation_mape.empty()) throw UsageError(kModule, "no candidate models to select from");
  std::vector<std::size_t> order(validation_mape.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return validation_mape[a] < validation_mape[b];
  });
  order.resize(std::min(k, order.size()));
  return order;
}

std::vector<double> compute_weights(std::span<const double> validation_errors, WeightScheme scheme) {
  const std::size_t m = validation_errors.size();
  if (m == 0) throw UsageError(kModule, "cannot weight an empty ensemble");
  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  if (scheme == WeightScheme::kEqual) return w;
  double total = 0.0;
  for (double e : validation_errors) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw DataError(kModule, "inverse-error weighting needs positive finite validation errors");
    }
    total += 1.0 / e;
  }
  for (std::size_t i = 0; i < m; ++i) w[i] = (1.0 / validation_errors[i]) / total;
  return w;
}

std::vector<double> compute_weights_or_fallback(std::span<const double> validation_errors,
                                                WeightScheme scheme) {
  try {
    return compute_weights(validation_errors, scheme);
  } catch (const DataError&) {
    const auto zeros = static_cast<double>(
        std::count(validation_errors.begin(), validation_errors.end(), 0.0));
    if (zeros == 0.0) throw;
    std::vector<double> w(validation_errors.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (validation_errors[i] == 0.0) w[i] = 1.0 / zeros;
    }
    return w;
  }
}

std::vector<double> weighted_average(std::span<const std::vector<double>> member_predictions,
                                     std::span<const double> weights) {
  if (member_predictions.size() != weights.size() || weights.empty()) {
    throw UsageError(kModule, "need one weight per member prediction");
  }
  const std::size_t n = member_predictions.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t m = 0; m < weights.size(); ++m) {
    if (member_predictions[m].size() != n) throw UsageError(kModule, "member predictions differ in length");
    for (std::size_t i = 0; i < n; ++i) out[i] += weights[m] * member_predictions[m][i];
  }
  return out;
}

std::vector<double> EnsembleBundle::weights() const {
  std::vector<double> w;
  for (const auto& m : members) w.push_back(m.weight);
  return w;
}

void EnsembleBundle::check_invariants() const {
  if (members.empty()) throw InvariantError(kModule, "ensemble has no members");
  double total = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].weight < 0.0 || members[i].weight > 1.0) {
      throw InvariantError(kModule, "member weight outside [0, 1]");
    }
    total += members[i].weight;
    if (i > 0 && members[i].validation_mape < members[i - 1].validation_mape) {
      throw InvariantError(kModule, "members are not sorted by validation MAPE");
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvariantError(kModule, "member weights do not sum to 1");
}

EnsembleBundle build_ensemble(std::vector<ScoredModel> candidates, Preprocessor preprocessor,
                              WeightScheme scheme, TargetTransform transform, std::size_t k) {
  std::vector<double> errors;
  for (const auto& c : candidates) errors.push_back(c.validation_mape);
  const auto picked = select_top_models(errors, k);
  std::vector<double> picked_errors;
  for (auto i : picked) picked_errors.push_back(errors[i]);
  const auto w = compute_weights_or_fallback(picked_errors, scheme);

  EnsembleBundle bundle;
  bundle.preprocessor = std::move(preprocessor);
  bundle.scheme = scheme;
  bundle.target_transform = transform;
  for (std::size_t m = 0; m < picked.size(); ++m) {
    auto& c = candidates[picked[m]];
    bundle.members.push_back({std::move(c.model), c.validation_mape, c.validation_smape, w[m]});
  }
  bundle.check_invariants();
  return bundle;
}

std::vector<std::vector<double>> member_predictions(const EnsembleBundle& bundle,
                                                    const FeatureMatrix& x, Execution exec) {
  std::vector<std::vector<double>> out(bundle.members.size());
  std::vector<std::exception_ptr> errors(out.size());
  const auto count = static_cast<std::ptrdiff_t>(out.size());
  auto run = [&](std::size_t m) {
    try {
      out[m] = inverse_transform(bundle.target_transform, predict(bundle.members[m].model, x));
    } catch (...) {
      errors[m] = std::current_exception();
    }
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t m = 0; m < count; ++m) run(static_cast<std::size_t>(m));
  } else {
    for (std::ptrdiff_t m = 0; m < count; ++m) run(static_cast<std::size_t>(m));
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<double> ensemble_predict(const EnsembleBundle& bundle, const FeatureMatrix& x,
                                     Execution exec) {
  const auto preds = member_predictions(bundle, x, exec);
  return weighted_average(preds, bundle.weights());
}

}  // namespace coldstart
