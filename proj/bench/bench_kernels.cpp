// Serial vs OpenMP timings for the parallel kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include "coldstart/importance.hpp"
#include "coldstart/models.hpp"
#include "coldstart/random.hpp"
#include "coldstart/tree.hpp"
#include "coldstart/tuning.hpp"

using namespace coldstart;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<double> y;
};

const Problem& problem() {
  static const Problem p = [] {
    const std::size_t n = 800, cols = 12;
    Rng rng(3);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < cols; ++j) names.push_back("x" + std::to_string(j));
    std::vector<double> values(n * cols);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < cols; ++j) values[i * cols + j] = rng.normal();
      const double* r = &values[i * cols];
      y[i] = 1000.0 * std::exp(0.5 * r[0] + 0.2 * r[1] * r[2]) + 50.0 * rng.normal();
    }
    return Problem{FeatureMatrix(n, names, values), y};
  }();
  return p;
}

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void BM_ForestFit(benchmark::State& state) {
  const auto& p = problem();
  TreeParams params;
  params.max_depth = 10;
  params.min_samples_split = 10;
  for (auto _ : state) {
    auto f = fit_random_forest(p.x, p.y, params, 50, exec_of(state));
    benchmark::DoNotOptimize(f.trees.data());
  }
}
BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PermutationImportance(benchmark::State& state) {
  const auto& p = problem();
  TreeParams params;
  params.max_depth = 8;
  const auto forest = fit_random_forest(p.x, p.y, params, 30);
  const Predictor predictor = [&forest](const FeatureMatrix& m) { return predict(forest, m, Execution::kSerial); };
  for (auto _ : state) {
    auto r = permutation_importance(predictor, p.x, p.y, ImportanceMetric::kMape, 3, 11, exec_of(state));
    benchmark::DoNotOptimize(r.features.data());
  }
}
BENCHMARK(BM_PermutationImportance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CrossValidate(benchmark::State& state) {
  const auto& p = problem();
  ModelSpec spec;
  spec.family = ModelFamily::kGbt;
  spec.params = {{"rounds", 50.0}, {"max_depth", 3.0}, {"learning_rate", 0.3}};
  const auto plan = kfold_indices(p.y.size(), 5, 1);
  for (auto _ : state) {
    auto scores = cross_validate(spec, p.x, p.y, plan, Scoring::kNegMape, exec_of(state));
    benchmark::DoNotOptimize(scores.data());
  }
}
BENCHMARK(BM_CrossValidate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
