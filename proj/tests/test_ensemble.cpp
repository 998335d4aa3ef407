#include <algorithm>
#include <numeric>

#include "coldstart/ensemble.hpp"
#include "coldstart/errors.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coldstart;

TEST_CASE("select_top_models") {
  const std::vector<double> mapes = {15, 18, 20, 22, 23, 25};
  CHECK(select_top_models(mapes) == std::vector<std::size_t>{0, 1, 2});
  const std::vector<double> shuffled = {22, 15, 25, 20, 18, 23};
  CHECK(select_top_models(shuffled) == std::vector<std::size_t>{1, 4, 3});
  CHECK(select_top_models(std::vector<double>{3, 1}) == std::vector<std::size_t>{1, 0});
  CHECK(select_top_models(std::vector<double>{5, 5, 5, 5}) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("compute_weights examples") {
  const auto w = compute_weights(std::vector<double>{10, 20, 40}, WeightScheme::kInverseError);
  CHECK(w[0] == doctest::Approx(4.0 / 7).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(2.0 / 7).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(1.0 / 7).epsilon(1e-15));
  for (double v : compute_weights(std::vector<double>{5, 5, 5}, WeightScheme::kInverseError)) {
    CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  CHECK(compute_weights(std::vector<double>{7}, WeightScheme::kInverseError) == std::vector<double>{1.0});
  CHECK(compute_weights(std::vector<double>{1, 9}, WeightScheme::kEqual) == std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(compute_weights(std::vector<double>{0, 9}, WeightScheme::kInverseError), DataError);
  CHECK(compute_weights_or_fallback(std::vector<double>{0, 9, 0}, WeightScheme::kInverseError) ==
        std::vector<double>{0.5, 0.0, 0.5});
}

TEST_CASE("weights: sum to one, nonnegative, monotone in error") {
  Rng rng(10);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(6);
    std::vector<double> e(m);
    for (auto& v : e) v = 0.1 + 50 * rng.uniform01();
    const auto w = compute_weights(e, WeightScheme::kInverseError);
    REQUIRE(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-12);
    for (double v : w) REQUIRE(v >= 0.0);
    auto better = e;
    better[0] *= 0.5;
    REQUIRE(compute_weights(better, WeightScheme::kInverseError)[0] >= w[0]);
  }
}

TEST_CASE("weighted_average examples and convexity") {
  const std::vector<std::vector<double>> preds = {{10}, {20}, {30}};
  CHECK(weighted_average(preds, std::vector<double>{0.5, 0.3, 0.2})[0] == doctest::Approx(17.0).epsilon(1e-15));
  const std::vector<std::vector<double>> same = {{4, 5}, {4, 5}};
  CHECK(weighted_average(same, std::vector<double>{0.25, 0.75}) == std::vector<double>{4, 5});
  const std::vector<std::vector<double>> m = {{1, 2}, {3, 4}, {5, 6}};
  CHECK(weighted_average(m, std::vector<double>{1, 0, 0}) == std::vector<double>{1, 2});

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> p(3, std::vector<double>(5));
    for (auto& row : p) {
      for (auto& v : row) v = rng.normal() * 100;
    }
    std::vector<double> e = {1 + rng.uniform01(), 1 + rng.uniform01(), 1 + rng.uniform01()};
    const auto avg = weighted_average(p, compute_weights(e, WeightScheme::kInverseError));
    for (std::size_t i = 0; i < 5; ++i) {
      const double lo = std::min({p[0][i], p[1][i], p[2][i]});
      const double hi = std::max({p[0][i], p[1][i], p[2][i]});
      REQUIRE(avg[i] >= lo - 1e-9);
      REQUIRE(avg[i] <= hi + 1e-9);
    }
  }
}

namespace {

Model constant_model(double c) {
  LinearModel lm;
  lm.coefficients = {0.0};
  lm.intercept = c;
  return Model{ModelFamily::kRidge, {}, lm};
}

Preprocessor unit_preprocessor() {
  RawTable t;
  t.add_column(Column{{"x", ColumnRole::kNumeric}, NumericCells{0.0, 1.0}});
  return fit_preprocessor(t);
}

}  // namespace

TEST_CASE("build_ensemble sorts, weights and ignores submission order") {
  std::vector<ScoredModel> candidates = {
      {constant_model(1), 25, 20}, {constant_model(2), 15, 12}, {constant_model(3), 20, 16},
      {constant_model(4), 18, 14}, {constant_model(5), 22, 18}, {constant_model(6), 23, 19}};
  const auto bundle = build_ensemble(candidates, unit_preprocessor(), WeightScheme::kInverseError,
                                     TargetTransform::kNone);
  REQUIRE(bundle.members.size() == 3);
  CHECK(bundle.members[0].validation_mape == 15);
  CHECK(bundle.members[1].validation_mape == 18);
  CHECK(bundle.members[2].validation_mape == 20);
  std::reverse(candidates.begin(), candidates.end());
  const auto again = build_ensemble(candidates, unit_preprocessor(), WeightScheme::kInverseError,
                                    TargetTransform::kNone);
  CHECK(again.weights() == bundle.weights());
  RawTable one;
  one.add_column(Column{{"x", ColumnRole::kNumeric}, NumericCells{0.5}});
  const auto x = bundle.preprocessor.transform(one);
  const auto w = bundle.weights();
  CHECK(ensemble_predict(bundle, x)[0] == doctest::Approx(w[0] * 2 + w[1] * 4 + w[2] * 3).epsilon(1e-15));
  CHECK(ensemble_predict(bundle, x, Execution::kSerial) == ensemble_predict(bundle, x, Execution::kParallel));
}

TEST_CASE("member predictions are inverse-transformed") {
  std::vector<ScoredModel> candidates = {{constant_model(std::log1p(99.0)), 10, 10}};
  const auto bundle = build_ensemble(candidates, unit_preprocessor(), WeightScheme::kInverseError,
                                     TargetTransform::kLog1p);
  RawTable one;
  one.add_column(Column{{"x", ColumnRole::kNumeric}, NumericCells{0.5}});
  CHECK(ensemble_predict(bundle, bundle.preprocessor.transform(one))[0] == doctest::Approx(99.0).epsilon(1e-12));
}
