#include "coldstart/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>

#include "coldstart/errors.hpp"
#include "coldstart/metrics.hpp"
#include "coldstart/random.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "tuning";

ModelSpec merge(const ModelSpec& base, const ParamAssignment& sampled) {
  ModelSpec spec = base;
  for (const auto& [name, value] : sampled) {
    auto it = std::find_if(spec.params.begin(), spec.params.end(),
                           [&](const auto& kv) { return kv.first == name; });
    if (it == spec.params.end()) {
      spec.params.emplace_back(name, value);
    } else {
      it->second = value;
    }
  }
  return spec;
}

// Runs evaluate(candidate, fold) for every pair, in parallel if requested,
// and assembles results keyed by candidate index.
template <typename Evaluate>
SearchResult run_search(const ModelSpec& base, const ParamGrid& grid, int n_iter, int k,
                        std::uint64_t seed, Scoring scoring, Execution exec, Evaluate evaluate) {
  grid.validate();
  const auto picks = sample_grid_indices(grid, n_iter, seed);
  SearchResult result;
  result.family = base.family;
  result.scoring = scoring;
  result.seed = seed;
  result.k = k;
  for (std::size_t idx : picks) result.candidates.push_back({grid.at(idx), {}, 0.0});

  const std::size_t n_tasks = picks.size() * static_cast<std::size_t>(k);
  std::vector<double> scores(n_tasks, 0.0);
  std::vector<std::exception_ptr> errors(n_tasks);
  auto run_task = [&](std::size_t t) {
    try {
      const std::size_t c = t / static_cast<std::size_t>(k);
      const int fold = static_cast<int>(t % static_cast<std::size_t>(k));
      scores[t] = evaluate(merge(base, result.candidates[c].params), fold);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  const auto count = static_cast<std::ptrdiff_t>(n_tasks);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < count; ++t) run_task(static_cast<std::size_t>(t));
  } else {
    for (std::ptrdiff_t t = 0; t < count; ++t) run_task(static_cast<std::size_t>(t));
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t c = 0; c < result.candidates.size(); ++c) {
    auto& cand = result.candidates[c];
    const auto first = scores.begin() + static_cast<std::ptrdiff_t>(c * static_cast<std::size_t>(k));
    cand.fold_scores.assign(first, first + k);
    cand.mean_score = std::accumulate(cand.fold_scores.begin(), cand.fold_scores.end(), 0.0) / k;
    if (cand.mean_score > result.candidates[result.best].mean_score) result.best = c;
  }
  return result;
}

void check_plan(const FoldPlan& plan, std::size_t n) {
  if (plan.assignments.size() != n) {
    throw UsageError(kModule, "fold plan covers " + std::to_string(plan.assignments.size()) +
                                  " rows, data has " + std::to_string(n));
  }
}

}  // namespace

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

FoldPlan kfold_indices(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError(kModule, "k must be at least 2");
  if (static_cast<std::size_t>(k) > n) {
    throw UsageError(kModule, "k=" + std::to_string(k) + " exceeds the row count " + std::to_string(n));
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  const auto perm = seeded_permutation(n, seed);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) plan.assignments[perm[pos++]] = f;
  }
  return plan;
}

std::size_t ParamGrid::size() const {
  if (entries.empty()) return 0;
  std::size_t total = 1;
  for (const auto& [name, values] : entries) {
    if (values.empty()) return 0;
    if (total > std::numeric_limits<std::size_t>::max() / values.size()) {
      throw UsageError(kModule, "parameter grid is too large");
    }
    total *= values.size();
  }
  return total;
}

ParamAssignment ParamGrid::at(std::size_t index) const {
  if (index >= size()) throw UsageError(kModule, "grid index " + std::to_string(index) + " out of range");
  ParamAssignment out(entries.size());
  for (std::size_t e = entries.size(); e-- > 0;) {
    const auto& values = entries[e].second;
    out[e] = {entries[e].first, values[index % values.size()]};
    index /= values.size();
  }
  return out;
}

void ParamGrid::validate() const {
  if (entries.empty()) throw UsageError(kModule, "parameter grid is empty");
  std::set<std::string> names;
  for (const auto& [name, values] : entries) {
    if (values.empty()) throw UsageError(kModule, "grid entry '" + name + "' has no values");
    if (!names.insert(name).second) throw UsageError(kModule, "grid lists '" + name + "' twice");
  }
}

Json ParamGrid::to_json() const {
  Json j = Json::object();
  for (const auto& [name, values] : entries) {
    Json arr = Json::array();
    for (const auto& v : values) arr.push_back(param_to_json(v));
    j[name] = arr;
  }
  return j;
}

ParamGrid ParamGrid::from_json(const Json& j) {
  ParamGrid g;
  if (!j.is_object()) throw UsageError(kModule, "a parameter grid must be a JSON object");
  for (const auto& [name, values] : j.items()) {
    std::vector<ParamValue> list;
    if (values.is_array()) {
      for (const auto& v : values) list.push_back(param_from_json(v));
    } else {
      list.push_back(param_from_json(values));
    }
    g.entries.emplace_back(name, std::move(list));
  }
  return g;
}

ParamGrid default_grid(ModelFamily f) {
  using namespace std::string_literals;
  ParamGrid g;
  switch (f) {
    case ModelFamily::kGbt:
      g.entries = {{"rounds", {50.0, 100.0, 200.0}},
                   {"max_depth", {2.0, 3.0, 4.0}},
                   {"learning_rate", {0.1, 0.3, 0.5}}};
      break;
    case ModelFamily::kRandomForest:
      g.entries = {{"n_estimators", {200.0, 500.0, 1000.0}},
                   {"min_samples_split", {2.0, 10.0, 30.0}},
                   {"max_depth", {10.0, 30.0, "unlimited"s}}};
      break;
    case ModelFamily::kDecisionTree:
      g.entries = {{"max_depth", {3.0, 5.0, 8.0, "unlimited"s}},
                   {"min_samples_split", {2.0, 10.0, 30.0}}};
      break;
    case ModelFamily::kLasso:
    case ModelFamily::kRidge:
    case ModelFamily::kElasticNet:
      g.entries = {{"alpha", {0.001, 0.01, 0.1, 1.0, 10.0, 100.0}}};
      break;
  }
  return g;
}

std::string_view to_string(Scoring s) { return s == Scoring::kR2 ? "r2" : "neg_mape"; }

Scoring scoring_from_string(std::string_view s) {
  if (s == "r2") return Scoring::kR2;
  if (s == "neg_mape") return Scoring::kNegMape;
  throw UsageError(kModule, "scoring must be r2 or neg_mape, got '" + std::string(s) + "'");
}

double score_predictions(Scoring s, std::span<const double> y, std::span<const double> y_hat) {
  return s == Scoring::kR2 ? r2(y, y_hat) : -mape(y, y_hat);
}

std::string_view to_string(TargetTransform t) { return t == TargetTransform::kNone ? "none" : "log1p"; }

TargetTransform target_transform_from_string(std::string_view s) {
  if (s == "none") return TargetTransform::kNone;
  if (s == "log1p") return TargetTransform::kLog1p;
  throw UsageError(kModule, "target_transform must be none or log1p, got '" + std::string(s) + "'");
}

std::vector<double> forward_transform(TargetTransform t, std::span<const double> y) {
  std::vector<double> out(y.begin(), y.end());
  if (t == TargetTransform::kLog1p) {
    for (auto& v : out) v = std::log1p(v);
  }
  return out;
}

std::vector<double> inverse_transform(TargetTransform t, std::span<const double> y) {
  std::vector<double> out(y.begin(), y.end());
  if (t == TargetTransform::kLog1p) {
    for (auto& v : out) v = std::expm1(v);
  }
  return out;
}

std::vector<double> cross_validate(const ModelSpec& spec, const FeatureMatrix& x,
                                   std::span<const double> y, const FoldPlan& plan, Scoring scoring,
                                   Execution exec) {
  check_plan(plan, x.rows());
  std::vector<double> scores(static_cast<std::size_t>(plan.k));
  std::vector<std::exception_ptr> errors(scores.size());
  auto run_fold = [&](int fold) {
    try {
      const auto train = plan.train_rows(fold);
      const auto test = plan.test_rows(fold);
      if (train.empty()) throw DataError(kModule, "fold " + std::to_string(fold) + " has no training rows");
      std::vector<double> y_train;
      std::vector<double> y_test;
      for (auto r : train) y_train.push_back(y[r]);
      for (auto r : test) y_test.push_back(y[r]);
      const auto model = fit_model(spec, x.select_rows(train), y_train, Execution::kSerial);
      scores[static_cast<std::size_t>(fold)] =
          score_predictions(scoring, y_test, predict(model, x.select_rows(test)));
    } catch (...) {
      errors[static_cast<std::size_t>(fold)] = std::current_exception();
    }
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int f = 0; f < plan.k; ++f) run_fold(f);
  } else {
    for (int f = 0; f < plan.k; ++f) run_fold(f);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return scores;
}

namespace {

struct FoldOutcome {
  double score = 0.0;
  Preprocessor preprocessor;
};

FoldOutcome run_pipeline_fold(const ModelSpec& spec, const RawTable& features, const TargetVector& y,
                              const FoldPlan& plan, int fold, Scoring scoring,
                              const PipelineContext& context) {
  const auto train = plan.train_rows(fold);
  const auto test = plan.test_rows(fold);
  if (train.empty()) throw DataError(kModule, "fold " + std::to_string(fold) + " has no training rows");
  const auto train_features = features.select_rows(train);
  FoldOutcome out;
  out.preprocessor = fit_preprocessor(train_features, context.preprocess);
  const auto y_train = y.select_rows(train);
  const auto y_test = y.select_rows(test);
  const auto model = fit_model(spec, out.preprocessor.transform(train_features),
                               forward_transform(context.transform, y_train.values()),
                               Execution::kSerial);
  const auto raw_prediction = predict(model, out.preprocessor.transform(features.select_rows(test)));
  out.score = score_predictions(scoring, y_test.values(),
                                inverse_transform(context.transform, raw_prediction));
  return out;
}

}  // namespace

PipelineCvResult cross_validate_pipeline(const ModelSpec& spec, const RawTable& features,
                                         const TargetVector& y, const FoldPlan& plan,
                                         Scoring scoring, const PipelineContext& context,
                                         Execution exec) {
  check_plan(plan, features.n_rows());
  PipelineCvResult result;
  result.scores.resize(static_cast<std::size_t>(plan.k));
  result.fold_preprocessors.resize(static_cast<std::size_t>(plan.k));
  std::vector<std::exception_ptr> errors(result.scores.size());
  auto run_fold = [&](int fold) {
    try {
      auto outcome = run_pipeline_fold(spec, features, y, plan, fold, scoring, context);
      result.scores[static_cast<std::size_t>(fold)] = outcome.score;
      result.fold_preprocessors[static_cast<std::size_t>(fold)] = std::move(outcome.preprocessor);
    } catch (...) {
      errors[static_cast<std::size_t>(fold)] = std::current_exception();
    }
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int f = 0; f < plan.k; ++f) run_fold(f);
  } else {
    for (int f = 0; f < plan.k; ++f) run_fold(f);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

std::vector<std::size_t> sample_grid_indices(const ParamGrid& grid, int n_iter, std::uint64_t seed) {
  if (n_iter < 1) throw UsageError(kModule, "n_iter must be at least 1");
  const std::size_t total = grid.size();
  if (total == 0) throw UsageError(kModule, "parameter grid is empty");
  const std::size_t take = std::min(total, static_cast<std::size_t>(n_iter));
  Rng rng(seed);
  std::vector<std::size_t> picks;
  picks.reserve(take);
  if (total <= (std::size_t{1} << 20)) {
    // Partial Fisher-Yates over the full index list.
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.uniform_index(total - i);
      std::swap(pool[i], pool[j]);
      picks.push_back(pool[i]);
    }
  } else {
    std::set<std::size_t> seen;
    while (picks.size() < take) {
      const std::size_t idx = rng.uniform_index(total);
      if (seen.insert(idx).second) picks.push_back(idx);
    }
  }
  return picks;
}

SearchResult randomized_search(const ModelSpec& base, const ParamGrid& grid, int n_iter,
                               const FeatureMatrix& x, std::span<const double> y, int k,
                               std::uint64_t seed, Scoring scoring, Execution exec) {
  const auto plan = kfold_indices(x.rows(), k, seed);
  std::vector<FeatureMatrix> train_x(static_cast<std::size_t>(k));
  std::vector<FeatureMatrix> test_x(static_cast<std::size_t>(k));
  std::vector<std::vector<double>> train_y(static_cast<std::size_t>(k));
  std::vector<std::vector<double>> test_y(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    const auto train = plan.train_rows(f);
    const auto test = plan.test_rows(f);
    train_x[fi] = x.select_rows(train);
    test_x[fi] = x.select_rows(test);
    for (auto r : train) train_y[fi].push_back(y[r]);
    for (auto r : test) test_y[fi].push_back(y[r]);
  }
  return run_search(base, grid, n_iter, k, seed, scoring, exec,
                    [&](const ModelSpec& spec, int fold) {
                      const auto fi = static_cast<std::size_t>(fold);
                      const auto model = fit_model(spec, train_x[fi], train_y[fi], Execution::kSerial);
                      return score_predictions(scoring, test_y[fi], predict(model, test_x[fi]));
                    });
}

SearchResult randomized_search_pipeline(const ModelSpec& base, const ParamGrid& grid, int n_iter,
                                        const RawTable& features, const TargetVector& y, int k,
                                        std::uint64_t seed, Scoring scoring,
                                        const PipelineContext& context, Execution exec) {
  const auto plan = kfold_indices(features.n_rows(), k, seed);
  return run_search(base, grid, n_iter, k, seed, scoring, exec,
                    [&](const ModelSpec& spec, int fold) {
                      return run_pipeline_fold(spec, features, y, plan, fold, scoring, context).score;
                    });
}

Json SearchResult::to_json() const {
  Json j;
  j["family"] = coldstart::to_string(family);
  j["scoring"] = coldstart::to_string(scoring);
  j["seed"] = seed;
  j["k"] = k;
  j["best_index"] = best;
  j["best_params"] = assignment_to_json(winner().params);
  j["cv_results"] = Json::array();
  for (const auto& c : candidates) {
    j["cv_results"].push_back({{"params", assignment_to_json(c.params)},
                               {"fold_scores", c.fold_scores},
                               {"mean_score", c.mean_score}});
  }
  return j;
}

}  // namespace coldstart
