#include <numeric>

#include "coldstart/errors.hpp"
#include "coldstart/importance.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coldstart;

namespace {

struct Fixture {
  FeatureMatrix x;
  std::vector<double> y;
};

// y depends strongly on x0, weakly on x1, not at all on x2.
Fixture fixture(std::uint64_t seed) {
  Rng rng(seed);
  auto x = testing::random_matrix(200, 3, rng);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = 100 + 20 * x(i, 0) + 3 * x(i, 1) + rng.normal();
  return {x, y};
}

Predictor linear_predictor(std::vector<double> beta, double b0) {
  return [beta, b0](const FeatureMatrix& m) {
    std::vector<double> out(m.rows(), b0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < beta.size(); ++j) out[i] += beta[j] * m(i, j);
    }
    return out;
  };
}

}  // namespace

TEST_CASE("permutation importance ranks the driving feature first") {
  const auto f = fixture(1);
  const auto predictor = linear_predictor({20, 3, 0}, 100);
  for (auto metric : {ImportanceMetric::kMape, ImportanceMetric::kR2}) {
    const auto r = permutation_importance(predictor, f.x, f.y, metric, 5, 42);
    CHECK(r.rank_of("x0") == 1);
    CHECK(r.rank_of("x1") == 2);
    // An unused feature changes nothing.
    CHECK(r.features[2].score == 0.0);
  }
}

TEST_CASE("independent feature scores within noise of zero for a fitted model") {
  const auto f = fixture(2);
  ModelSpec spec;
  spec.family = ModelFamily::kRidge;
  spec.params = {{"alpha", 0.01}};
  const auto model = fit_model(spec, f.x, f.y);
  const Predictor predictor = [&model](const FeatureMatrix& m) { return predict(model, m); };
  const auto r = permutation_importance(predictor, f.x, f.y, ImportanceMetric::kR2, 10, 7);
  CHECK(std::abs(r.features[2].score) < 0.01);
  CHECK(r.features[0].score > 0.5);
}

TEST_CASE("permutation importance is deterministic and execution-independent") {
  const auto f = fixture(3);
  const auto predictor = linear_predictor({20, 3, 1}, 100);
  const auto a = permutation_importance(predictor, f.x, f.y, ImportanceMetric::kMape, 4, 9, Execution::kSerial);
  const auto b = permutation_importance(predictor, f.x, f.y, ImportanceMetric::kMape, 4, 9, Execution::kParallel);
  CHECK(a.to_json() == b.to_json());
  CHECK_THROWS(permutation_importance(predictor, f.x, f.y, ImportanceMetric::kMape, 0, 9));
}

TEST_CASE("impurity importance: stump, normalization, degenerate and linear") {
  const auto x = testing::matrix({{1, 5}, {2, 5}, {3, 5}, {4, 5}});
  TreeParams stump;
  stump.max_depth = 1;
  const std::vector<DecisionTree> one = {fit_decision_tree(x, std::vector<double>{0, 0, 10, 10}, stump)};
  const auto r = impurity_importance(one, {"a", "b"});
  CHECK(r.features[0].score == 1.0);
  CHECK(r.features[1].score == 0.0);

  const std::vector<DecisionTree> flat = {fit_decision_tree(x, std::vector<double>{1, 1, 1, 1}, stump)};
  CHECK(impurity_importance(flat, {"a", "b"}).degenerate);

  const auto f = fixture(4);
  ModelSpec spec;
  spec.family = ModelFamily::kRandomForest;
  spec.params = {{"n_estimators", 15.0}, {"min_samples_split", 5.0}};
  const auto forest = fit_model(spec, f.x, f.y);
  const auto imp = impurity_importance(forest, {"x0", "x1", "x2"});
  double total = 0.0;
  for (const auto& fi : imp.features) total += fi.score;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(imp.rank_of("x0") == 1);

  spec.family = ModelFamily::kLasso;
  spec.params = {};
  CHECK_THROWS(impurity_importance(fit_model(spec, f.x, f.y), {"x0", "x1", "x2"}));
}

TEST_CASE("ranking keeps feature order on ties") {
  const auto r = make_importance_report({"a", "b", "c"}, {1.0, 2.0, 1.0});
  CHECK(r.rank_of("b") == 1);
  CHECK(r.rank_of("a") == 2);
  CHECK(r.rank_of("c") == 3);
}
