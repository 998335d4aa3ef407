#include "coldstart/importance.hpp"

#include <algorithm>
#include <exception>
#include <numeric>

#include "coldstart/errors.hpp"
#include "coldstart/metrics.hpp"
#include "coldstart/random.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "evaluate";

double score_of(ImportanceMetric metric, std::span<const double> y, std::span<const double> y_hat) {
  return metric == ImportanceMetric::kMape ? mape(y, y_hat) : r2(y, y_hat);
}

}  // namespace

ImportanceReport make_importance_report(std::vector<std::string> names, std::vector<double> scores) {
  if (names.size() != scores.size()) throw InvariantError(kModule, "importance names/scores mismatch");
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  ImportanceReport report;
  report.features.resize(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    report.features[i] = {std::move(names[i]), scores[i], 0};
  }
  for (std::size_t r = 0; r < order.size(); ++r) report.features[order[r]].rank = static_cast<int>(r + 1);
  return report;
}

std::vector<FeatureImportance> ImportanceReport::ranked() const {
  auto out = features;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return out;
}

int ImportanceReport::rank_of(std::string_view name) const {
  for (const auto& f : features) {
    if (f.name == name) return f.rank;
  }
  throw UsageError(kModule, "no importance entry for '" + std::string(name) + "'");
}

Json ImportanceReport::to_json() const {
  Json j;
  j["degenerate"] = degenerate;
  j["features"] = Json::array();
  for (const auto& f : ranked()) {
    j["features"].push_back({{"name", f.name}, {"score", f.score}, {"rank", f.rank}});
  }
  return j;
}

ImportanceReport permutation_importance(const Predictor& predictor, const FeatureMatrix& x,
                                        std::span<const double> y, ImportanceMetric metric,
                                        int repeats, std::uint64_t seed, Execution exec) {
  if (!predictor) throw UsageError(kModule, "permutation importance needs a fitted model");
  if (repeats < 1) throw UsageError(kModule, "repeats must be at least 1");
  if (x.rows() != y.size()) throw UsageError(kModule, "feature matrix and target are misaligned");

  const double baseline = score_of(metric, y, predictor(x));
  const std::size_t p = x.cols();
  std::vector<double> scores(p, 0.0);
  std::vector<std::exception_ptr> errors(p);

  auto score_feature = [&](std::size_t j) {
    try {
      const auto original = x.column(j);
      double total = 0.0;
      for (int r = 0; r < repeats; ++r) {
        const auto perm = seeded_permutation(
            x.rows(), mix_seed(seed, j * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(r)));
        std::vector<double> shuffled(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) shuffled[i] = original[perm[i]];
        const double permuted = score_of(metric, y, predictor(x.with_column(j, shuffled)));
        total += metric == ImportanceMetric::kMape ? permuted - baseline : baseline - permuted;
      }
      scores[j] = total / static_cast<double>(repeats);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };

  const auto count = static_cast<std::ptrdiff_t>(p);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < count; ++j) score_feature(static_cast<std::size_t>(j));
  } else {
    for (std::ptrdiff_t j = 0; j < count; ++j) score_feature(static_cast<std::size_t>(j));
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return make_importance_report(x.feature_names(), std::move(scores));
}

ImportanceReport impurity_importance(std::span<const DecisionTree> trees,
                                     std::vector<std::string> names) {
  std::vector<double> scores(names.size(), 0.0);
  for (const auto& tree : trees) {
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) continue;
      scores.at(static_cast<std::size_t>(node.feature)) +=
          static_cast<double>(node.n_samples) * node.impurity_decrease;
    }
  }
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (total > 0.0) {
    for (auto& s : scores) s /= total;
  }
  auto report = make_importance_report(std::move(names), std::move(scores));
  report.degenerate = !(total > 0.0);
  return report;
}

ImportanceReport impurity_importance(const Model& model, std::vector<std::string> names) {
  return std::visit(
      [&](const auto& m) -> ImportanceReport {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          return impurity_importance(std::span<const DecisionTree>(&m, 1), std::move(names));
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          return impurity_importance(m.trees, std::move(names));
        } else if constexpr (std::is_same_v<T, GbtModel>) {
          return impurity_importance(m.stages, std::move(names));
        } else {
          throw UsageError(kModule, "impurity importance needs a tree-family model");
        }
      },
      model.fitted);
}

}  // namespace coldstart
