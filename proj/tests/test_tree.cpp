#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "coldstart/errors.hpp"
#include "coldstart/tree.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coldstart;
using testing::matrix;

namespace {

std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> f(p);
  std::iota(f.begin(), f.end(), 0);
  return f;
}

FeatureMatrix fixture_x() { return matrix({{1}, {2}, {3}, {4}}); }
const std::vector<double> kFixtureY = {0, 0, 10, 10};

}  // namespace

TEST_CASE("best_split fixture") {
  const auto s = best_split(fixture_x(), kFixtureY, all_features(1));
  REQUIRE(s);
  CHECK(s->feature == 0);
  CHECK(s->threshold == 2.5);
  CHECK(s->impurity_decrease == doctest::Approx(25.0).epsilon(1e-14));
}

TEST_CASE("best_split: constant target and tie rule") {
  CHECK_FALSE(best_split(fixture_x(), std::vector<double>{3, 3, 3, 3}, all_features(1)));
  const auto twin = matrix({{1, 1}, {2, 2}, {3, 3}, {4, 4}});
  const auto s = best_split(twin, kFixtureY, all_features(2));
  REQUIRE(s);
  CHECK(s->feature == 0);
}

TEST_CASE("best_split matches brute force on random instances") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(49);
    const std::size_t p = 1 + rng.uniform_index(5);
    std::vector<std::vector<double>> rows(n, std::vector<double>(p));
    std::vector<double> y(n);
    const bool coarse = trial % 2 == 0;  // coarse grids force ties
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = coarse ? static_cast<double>(rng.uniform_index(4)) : rng.normal();
      y[i] = coarse ? static_cast<double>(rng.uniform_index(3)) : rng.normal();
    }
    const auto x = matrix(rows);
    const auto got = best_split(x, y, all_features(p));
    const auto want = testing::brute_force_split(x, y);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      REQUIRE(got->feature == want->feature);
      REQUIRE(got->threshold == want->threshold);
      REQUIRE(got->impurity_decrease == doctest::Approx(want->impurity_decrease).epsilon(1e-9));
    }
  }
}

TEST_CASE("single tree behaviour") {
  TreeParams unlimited;
  const auto leaf = fit_decision_tree(fixture_x(), std::vector<double>{4, 4, 4, 4}, unlimited);
  CHECK(leaf.nodes().size() == 1);
  CHECK(predict(leaf, fixture_x()) == std::vector<double>{4, 4, 4, 4});

  Rng rng(3);
  const auto x = testing::random_matrix(40, 1, rng);
  std::vector<double> y(40);
  for (auto& v : y) v = rng.normal();
  CHECK(predict(fit_decision_tree(x, y, unlimited), x) == y);

  TreeParams stump;
  stump.max_depth = 1;
  const auto t = fit_decision_tree(fixture_x(), kFixtureY, stump);
  CHECK(t.depth() == 1);
  CHECK(predict(t, fixture_x()) == std::vector<double>{0, 0, 10, 10});
}

TEST_CASE("tree leaves predict training means and impurity decreases add up") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng.uniform_index(60);
    const auto x = testing::random_matrix(n, 3, rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 0) * 3 + rng.normal();
    TreeParams params;
    params.max_depth = 1 + static_cast<int>(rng.uniform_index(5));
    params.min_samples_split = 2 + static_cast<int>(rng.uniform_index(10));
    const auto tree = fit_decision_tree(x, y, params);

    std::vector<std::vector<double>> by_leaf(tree.nodes().size());
    for (std::size_t i = 0; i < n; ++i) by_leaf[tree.leaf_index(x.row(i))].push_back(y[i]);
    double weighted_leaf_var = 0.0;
    for (std::size_t l = 0; l < by_leaf.size(); ++l) {
      if (by_leaf[l].empty()) continue;
      double m = 0.0;
      for (double v : by_leaf[l]) m += v;
      m /= static_cast<double>(by_leaf[l].size());
      REQUIRE(tree.nodes()[l].value == doctest::Approx(m).epsilon(1e-12));
      for (double v : by_leaf[l]) weighted_leaf_var += (v - m) * (v - m);
    }
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double total_var = 0.0;
    for (double v : y) total_var += (v - mean) * (v - mean);
    double decrease_sum = 0.0;
    for (const auto& node : tree.nodes()) {
      if (!node.is_leaf()) decrease_sum += node.impurity_decrease * static_cast<double>(node.n_samples);
    }
    // n * (Var(y) - weighted leaf variance) = SS_total - SS_leaves
    REQUIRE(decrease_sum == doctest::Approx(total_var - weighted_leaf_var).epsilon(1e-9));
  }
}

TEST_CASE("forest: identity sample equals a single tree, determinism, serial == parallel") {
  Rng rng(5);
  const auto x = testing::random_matrix(60, 4, rng);
  std::vector<double> y(60);
  for (std::size_t i = 0; i < 60; ++i) y[i] = x(i, 1) - 2 * x(i, 2) + 0.1 * rng.normal();
  TreeParams params;
  params.seed = 9;
  const auto one = fit_random_forest(x, y, params, 1, Execution::kSerial, false);
  TreeParams tree_params = params;
  tree_params.seed = mix_seed(params.seed, 0);
  CHECK(predict(one, x) == predict(fit_decision_tree(x, y, tree_params), x));

  params.max_features = MaxFeatures::kThird;
  params.min_samples_split = 5;
  const auto a = fit_random_forest(x, y, params, 25, Execution::kSerial);
  const auto b = fit_random_forest(x, y, params, 25, Execution::kParallel);
  REQUIRE(a.trees.size() == 25);
  for (std::size_t t = 0; t < 25; ++t) CHECK(a.trees[t].to_json() == b.trees[t].to_json());
  CHECK(predict(a, x, Execution::kSerial) == predict(b, x, Execution::kParallel));
  CHECK(features_per_node(MaxFeatures::kThird, 30) == 10);
  CHECK(features_per_node(MaxFeatures::kSqrt, 30) == 5);
  CHECK(features_per_node(MaxFeatures::kThird, 2) == 1);
}

TEST_CASE("forest of identical trees predicts like one tree") {
  const auto x = fixture_x();
  TreeParams params;
  const auto tree = fit_decision_tree(x, kFixtureY, params);
  ForestModel forest{{tree, tree, tree}, params, 3, false};
  CHECK(predict(forest, x) == predict(tree, x));
}

TEST_CASE("gbt examples") {
  TreeParams stump;
  stump.max_depth = 1;
  const auto zero = fit_gbt(fixture_x(), kFixtureY, 0, 0.5, stump);
  CHECK(predict(zero, fixture_x()) == std::vector<double>{5, 5, 5, 5});

  const auto full = fit_gbt(fixture_x(), kFixtureY, 1, 1.0, stump);
  CHECK(predict(full, fixture_x()) == std::vector<double>{0, 0, 10, 10});

  // Hand-built: base 5, one stump of +-5, learning rate 0.5.
  std::vector<TreeNode> nodes(3);
  nodes[0] = {0, 2.5, 1, 2, 0.0, 25.0, 4};
  nodes[1] = {TreeNode::kLeaf, 0.0, -1, -1, -5.0, 0.0, 2};
  nodes[2] = {TreeNode::kLeaf, 0.0, -1, -1, 5.0, 0.0, 2};
  GbtModel model{5.0, {DecisionTree(nodes, 1)}, 0.5, stump};
  CHECK(predict(model, fixture_x()) == std::vector<double>{2.5, 2.5, 7.5, 7.5});
  CHECK_THROWS(fit_gbt(fixture_x(), kFixtureY, 1, 0.0, stump));
  CHECK_THROWS(fit_gbt(fixture_x(), kFixtureY, 1, 1.5, stump));
}

TEST_CASE("gbt training MSE is non-increasing per round") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testing::random_matrix(80, 3, rng);
    std::vector<double> y(80);
    for (std::size_t i = 0; i < 80; ++i) y[i] = std::sin(x(i, 0)) * 4 + x(i, 1) * x(i, 2) + rng.normal();
    TreeParams params;
    params.max_depth = 1 + trial % 3;
    const auto model = fit_gbt(x, y, 30, 0.1 + 0.09 * trial, params);
    double prev = INFINITY;
    for (std::size_t s = 0; s <= 30; ++s) {
      const auto p = predict_staged(model, x, s);
      double mse = 0.0;
      for (std::size_t i = 0; i < 80; ++i) mse += (p[i] - y[i]) * (p[i] - y[i]);
      REQUIRE(mse <= prev * (1 + 1e-12));
      prev = mse;
    }
    CHECK(predict_staged(model, x, 30) == predict(model, x));
  }
}

TEST_CASE("tree JSON round trip and validation") {
  Rng rng(1);
  const auto x = testing::random_matrix(50, 3, rng);
  std::vector<double> y(50);
  for (auto& v : y) v = rng.normal();
  TreeParams params;
  params.max_depth = 4;
  const auto tree = fit_decision_tree(x, y, params);
  const auto back = DecisionTree::from_json(Json::parse(tree.to_json().dump()), 3);
  CHECK(predict(back, x) == predict(tree, x));
  std::vector<TreeNode> bad_nodes(3);
  bad_nodes[0] = {5, 0.0, 1, 2, 0.0, 1.0, 2};
  CHECK_THROWS_AS(DecisionTree(bad_nodes, 1), InvariantError);
  const auto p2 = tree_params_from_json(tree_params_to_json(params));
  CHECK(p2.max_depth == params.max_depth);
  TreeParams bad;
  bad.min_samples_split = 1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}
