#include <algorithm>
#include <numeric>
#include <set>

#include "coldstart/errors.hpp"
#include "coldstart/tuning.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coldstart;

TEST_CASE("kfold sizes") {
  CHECK(kfold_indices(10, 5, 1).fold_sizes() == std::vector<std::size_t>{2, 2, 2, 2, 2});
  CHECK(kfold_indices(7, 3, 1).fold_sizes() == std::vector<std::size_t>{3, 2, 2});
  CHECK(kfold_indices(7, 3, 5).assignments == kfold_indices(7, 3, 5).assignments);
  CHECK_THROWS(kfold_indices(3, 4, 0));
  CHECK_THROWS(kfold_indices(3, 1, 0));
}

TEST_CASE("kfold is a partition for all (n, k, seed)") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_index(8));
    const std::size_t n = static_cast<std::size_t>(k) + rng.uniform_index(60);
    const auto plan = kfold_indices(n, k, rng.next_u64());
    std::vector<int> seen(n, 0);
    for (int f = 0; f < k; ++f) {
      const auto test = plan.test_rows(f);
      const auto train = plan.train_rows(f);
      REQUIRE(test.size() + train.size() == n);
      REQUIRE(!test.empty());
      for (auto r : test) ++seen[r];
      std::set<std::size_t> both(test.begin(), test.end());
      for (auto r : train) REQUIRE(both.insert(r).second);
    }
    for (int s : seen) REQUIRE(s == 1);
    const auto sizes = plan.fold_sizes();
    REQUIRE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  }
}

TEST_CASE("grid decode: last entry varies fastest") {
  ParamGrid g;
  g.entries = {{"a", {1.0, 2.0}}, {"b", {10.0, 20.0, 30.0}}};
  CHECK(g.size() == 6);
  CHECK(format_param(g.at(0)[1].second) == "10.0");
  CHECK(format_param(g.at(1)[1].second) == "20.0");
  CHECK(format_param(g.at(3)[0].second) == "2.0");
  CHECK(format_param(g.at(5)[1].second) == "30.0");
  CHECK_THROWS(g.at(6));
  const auto back = ParamGrid::from_json(g.to_json());
  CHECK(back.to_json() == g.to_json());
}

TEST_CASE("sample_grid_indices draws without replacement") {
  ParamGrid g = default_grid(ModelFamily::kGbt);
  REQUIRE(g.size() == 27);
  const auto idx = sample_grid_indices(g, 20, 42);
  CHECK(idx.size() == 20);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 20);
  CHECK(idx == sample_grid_indices(g, 20, 42));
  auto all = sample_grid_indices(g, 100, 1);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(27);
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(all == expected);
}

namespace {

struct Data {
  FeatureMatrix x;
  std::vector<double> y;
};

Data linear_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  auto x = testing::random_matrix(n, 3, rng);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 50 + 5 * x(i, 0) - 2 * x(i, 1) + rng.normal();
  return {x, y};
}

}  // namespace

TEST_CASE("cross_validate: mean predictor scores about zero R2, LOO counts") {
  // A lasso with a huge penalty predicts the training mean.
  const auto d = linear_data(100, 3);
  ModelSpec spec;
  spec.family = ModelFamily::kLasso;
  spec.params = {{"alpha", 1e6}};
  const auto scores = cross_validate(spec, d.x, d.y, kfold_indices(100, 5, 1), Scoring::kR2);
  REQUIRE(scores.size() == 5);
  for (double s : scores) {
    CHECK(s <= 0.0);
    CHECK(s > -0.3);
  }
  const auto small = linear_data(5, 4);
  spec.params = {{"alpha", 0.01}};
  CHECK(cross_validate(spec, small.x, small.y, kfold_indices(5, 5, 1), Scoring::kNegMape).size() == 5);
}

TEST_CASE("a memorizing tree does not score perfectly out of fold") {
  const auto d = linear_data(80, 9);
  ModelSpec spec;
  spec.family = ModelFamily::kDecisionTree;
  const auto scores = cross_validate(spec, d.x, d.y, kfold_indices(80, 5, 2), Scoring::kR2);
  for (double s : scores) CHECK(s < 1.0);
}

TEST_CASE("cross_validate serial and parallel agree") {
  const auto d = linear_data(60, 5);
  ModelSpec spec;
  spec.family = ModelFamily::kRandomForest;
  spec.params = {{"n_estimators", 10.0}, {"min_samples_split", 5.0}};
  const auto plan = kfold_indices(60, 4, 3);
  CHECK(cross_validate(spec, d.x, d.y, plan, Scoring::kNegMape, Execution::kSerial) ==
        cross_validate(spec, d.x, d.y, plan, Scoring::kNegMape, Execution::kParallel));
}

TEST_CASE("randomized search: determinism, winner, single-assignment grid") {
  const auto d = linear_data(60, 8);
  ModelSpec base;
  base.family = ModelFamily::kLasso;
  const auto grid = default_grid(ModelFamily::kLasso);
  const auto a = randomized_search(base, grid, 4, d.x, d.y, 5, 42, Scoring::kR2, Execution::kSerial);
  const auto b = randomized_search(base, grid, 4, d.x, d.y, 5, 42, Scoring::kR2, Execution::kParallel);
  CHECK(a.to_json() == b.to_json());
  REQUIRE(a.candidates.size() == 4);
  for (const auto& c : a.candidates) CHECK(a.winner().mean_score >= c.mean_score);

  ParamGrid one;
  one.entries = {{"alpha", {0.3}}};
  const auto s = randomized_search(base, one, 10, d.x, d.y, 5, 1, Scoring::kR2);
  CHECK(s.candidates.size() == 1);
  CHECK(format_param(s.winner().params[0].second) == "0.3");

  // n_iter >= |grid| evaluates everything: same winner as any exhaustive order.
  const auto full = randomized_search(base, grid, 100, d.x, d.y, 5, 7, Scoring::kR2);
  CHECK(full.candidates.size() == grid.size());
  double best = -INFINITY;
  for (const auto& c : full.candidates) best = std::max(best, c.mean_score);
  CHECK(full.winner().mean_score == best);
}

TEST_CASE("pipeline CV refits the preprocessor per fold") {
  // Each fold block has its own location, so every training complement has a
  // different mean.
  const std::size_t n = 40;
  RawTable t;
  NumericCells cells;
  std::vector<double> y;
  const auto plan = kfold_indices(n, 4, 11);
  for (std::size_t i = 0; i < n; ++i) {
    cells.push_back(100.0 * plan.assignments[i] + static_cast<double>(i % 3));
    y.push_back(1.0 + static_cast<double>(i));
  }
  t.add_column(Column{{"x", ColumnRole::kNumeric}, cells});
  ModelSpec spec;
  spec.family = ModelFamily::kRidge;
  const auto result = cross_validate_pipeline(spec, t, TargetVector(y), plan, Scoring::kNegMape, {});
  REQUIRE(result.fold_preprocessors.size() == 4);
  std::set<double> means;
  for (const auto& p : result.fold_preprocessors) means.insert(p.numeric()[0].mean);
  CHECK(means.size() == 4);
}

TEST_CASE("log1p transform round trips") {
  const std::vector<double> y = {0.0, 1.0, 1e6, 12345.678};
  const auto back = inverse_transform(TargetTransform::kLog1p, forward_transform(TargetTransform::kLog1p, y));
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(back[i] == doctest::Approx(y[i]).epsilon(1e-12));
}
