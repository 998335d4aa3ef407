#include "coldstart/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coldstart/errors.hpp"
#include "coldstart/random.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "model_trees";

void check_aligned(const FeatureMatrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) {
    throw UsageError(kModule, "feature matrix has " + std::to_string(x.rows()) +
                                  " rows but target has " + std::to_string(y.size()));
  }
  if (x.rows() == 0) throw UsageError(kModule, "cannot fit on zero rows");
}

void check_width(std::size_t expected, const FeatureMatrix& x) {
  if (x.cols() != expected) {
    throw UsageError(kModule, "model expects " + std::to_string(expected) + " features, got " +
                                  std::to_string(x.cols()));
  }
}

// Midpoint that stays strictly below `hi` so that `hi` routes right.
double split_point(double lo, double hi) {
  const double mid = std::midpoint(lo, hi);
  return mid < hi ? mid : lo;
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, const TreeParams& params)
      : x_(x), y_(y), params_(params), rng_(params.seed),
        n_candidates_(features_per_node(params.max_features, x.cols())) {
    all_features_.resize(x.cols());
    std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return DecisionTree(std::move(nodes_), x_.cols());
  }

 private:
  std::vector<std::size_t> sample_features() {
    if (n_candidates_ >= all_features_.size()) return all_features_;
    std::vector<std::size_t> pool = all_features_;
    for (std::size_t i = 0; i < n_candidates_; ++i) {
      const std::size_t j = i + rng_.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(n_candidates_);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_[r];
    nodes_[index].value = sum / static_cast<double>(rows.size());
    nodes_[index].n_samples = rows.size();

    const bool depth_ok = !params_.max_depth || depth < *params_.max_depth;
    if (!depth_ok || rows.size() < static_cast<std::size_t>(params_.min_samples_split) ||
        rows.size() < 2) {
      return index;
    }
    const auto features = sample_features();
    const auto split = best_split_rows(x_, y_, rows, features);
    if (!split) return index;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[index].feature = static_cast<int>(split->feature);
    nodes_[index].threshold = split->threshold;
    nodes_[index].impurity_decrease = split->impurity_decrease;
    const int l = grow(left, depth + 1);
    nodes_[index].left = l;
    const int r = grow(right, depth + 1);
    nodes_[index].right = r;
    return index;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  TreeParams params_;
  Rng rng_;
  std::size_t n_candidates_;
  std::vector<std::size_t> all_features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::string_view to_string(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::kAll: return "all";
    case MaxFeatures::kThird: return "third";
    case MaxFeatures::kSqrt: return "sqrt";
  }
  return "all";
}

MaxFeatures max_features_from_string(std::string_view s) {
  if (s == "all") return MaxFeatures::kAll;
  if (s == "third") return MaxFeatures::kThird;
  if (s == "sqrt") return MaxFeatures::kSqrt;
  throw UsageError(kModule, "max_features must be all, third or sqrt, got '" + std::string(s) + "'");
}

std::size_t features_per_node(MaxFeatures m, std::size_t p) {
  switch (m) {
    case MaxFeatures::kAll: return p;
    case MaxFeatures::kThird: return std::max<std::size_t>(1, p / 3);
    case MaxFeatures::kSqrt:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p))));
  }
  return p;
}

void TreeParams::validate() const {
  if (max_depth && *max_depth < 1) throw UsageError(kModule, "max_depth must be positive");
  if (min_samples_split < 2) throw UsageError(kModule, "min_samples_split must be at least 2");
}

std::optional<SplitCandidate> best_split(const FeatureMatrix& x, std::span<const double> y,
                                         std::span<const std::size_t> feature_subset) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return best_split_rows(x, y, rows, feature_subset);
}

std::optional<SplitCandidate> best_split_rows(const FeatureMatrix& x, std::span<const double> y,
                                              std::span<const std::size_t> rows,
                                              std::span<const std::size_t> feature_subset) {
  const std::size_t m = rows.size();
  if (m < 2) return std::nullopt;
  const double n = static_cast<double>(m);

  double mean = 0.0;
  for (std::size_t r : rows) mean += y[r];
  mean /= n;
  double parent_var = 0.0;
  for (std::size_t r : rows) parent_var += (y[r] - mean) * (y[r] - mean);
  parent_var /= n;
  if (!(parent_var > 0.0)) return std::nullopt;
  const double tie = kSplitTieTolerance * parent_var;

  std::vector<std::size_t> features(feature_subset.begin(), feature_subset.end());
  std::sort(features.begin(), features.end());

  // (feature value, centered target)
  std::vector<std::pair<double, double>> column(m);
  std::optional<SplitCandidate> best;
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < m; ++i) column[i] = {x(rows[i], f), y[rows[i]] - mean};
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double total = 0.0;
    for (const auto& [v, c] : column) total += c;

    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      left_sum += column[i].second;
      if (!(column[i].first < column[i + 1].first)) continue;
      const double n_left = static_cast<double>(i + 1);
      const double n_right = n - n_left;
      const double right_sum = total - left_sum;
      const double decrease =
          (left_sum * left_sum / n_left + right_sum * right_sum / n_right) / n;
      if (decrease <= tie) continue;
      if (!best || decrease > best->impurity_decrease + tie) {
        best = SplitCandidate{f, split_point(column[i].first, column[i + 1].first), decrease};
      }
    }
  }
  return best;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw InvariantError(kModule, "tree has no nodes");
  for (const auto& node : nodes_) {
    if (node.is_leaf()) continue;
    const auto size = static_cast<int>(nodes_.size());
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features_ ||
        node.left <= 0 || node.right <= 0 || node.left >= size || node.right >= size) {
      throw InvariantError(kModule, "malformed tree node");
    }
  }
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes_[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return i;
}

double DecisionTree::predict_row(std::span<const double> row) const {
  return nodes_[leaf_index(row)].value;
}

namespace {

Json node_to_json(const std::vector<TreeNode>& nodes, std::size_t i) {
  const auto& node = nodes[i];
  if (node.is_leaf()) return {{"prediction", node.value}, {"n_samples", node.n_samples}};
  Json j;
  j["feature_index"] = node.feature;
  j["threshold"] = node.threshold;
  j["impurity_decrease"] = node.impurity_decrease;
  j["n_samples"] = node.n_samples;
  j["value"] = node.value;
  j["left"] = node_to_json(nodes, static_cast<std::size_t>(node.left));
  j["right"] = node_to_json(nodes, static_cast<std::size_t>(node.right));
  return j;
}

int node_from_json(const Json& j, std::vector<TreeNode>& nodes) {
  const int index = static_cast<int>(nodes.size());
  nodes.emplace_back();
  TreeNode node;
  node.n_samples = j.at("n_samples").get<std::size_t>();
  if (j.contains("prediction")) {
    node.value = j.at("prediction").get<double>();
    nodes[static_cast<std::size_t>(index)] = node;
    return index;
  }
  node.feature = j.at("feature_index").get<int>();
  node.threshold = j.at("threshold").get<double>();
  node.impurity_decrease = j.at("impurity_decrease").get<double>();
  node.value = j.at("value").get<double>();
  node.left = node_from_json(j.at("left"), nodes);
  node.right = node_from_json(j.at("right"), nodes);
  nodes[static_cast<std::size_t>(index)] = node;
  return index;
}

}  // namespace

Json DecisionTree::to_json() const { return node_to_json(nodes_, 0); }

DecisionTree DecisionTree::from_json(const Json& j, std::size_t n_features) {
  std::vector<TreeNode> nodes;
  try {
    node_from_json(j, nodes);
  } catch (const Json::exception& e) {
    throw DataError(kModule, std::string("malformed tree: ") + e.what());
  }
  return DecisionTree(std::move(nodes), n_features);
}

DecisionTree fit_decision_tree(const FeatureMatrix& x, std::span<const double> y,
                               const TreeParams& params) {
  check_aligned(x, y);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_decision_tree_rows(x, y, rows, params);
}

DecisionTree fit_decision_tree_rows(const FeatureMatrix& x, std::span<const double> y,
                                    std::span<const std::size_t> rows, const TreeParams& params) {
  check_aligned(x, y);
  params.validate();
  if (rows.empty()) throw UsageError(kModule, "cannot fit a tree on zero rows");
  TreeBuilder builder(x, y, params);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

ForestModel fit_random_forest(const FeatureMatrix& x, std::span<const double> y,
                              const TreeParams& params, int n_estimators, Execution exec,
                              bool bootstrap) {
  check_aligned(x, y);
  params.validate();
  if (n_estimators <= 0) throw UsageError(kModule, "n_estimators must be positive");

  ForestModel forest;
  forest.params = params;
  forest.n_estimators = n_estimators;
  forest.bootstrap = bootstrap;
  forest.trees.resize(static_cast<std::size_t>(n_estimators));

  const std::size_t n = x.rows();
  auto fit_one = [&](std::size_t t) {
    TreeParams tree_params = params;
    tree_params.seed = mix_seed(params.seed, t);
    std::vector<std::size_t> sample(n);
    if (bootstrap) {
      Rng rng(tree_params.seed);
      for (auto& r : sample) r = rng.uniform_index(n);
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    forest.trees[t] = fit_decision_tree_rows(x, y, sample, tree_params);
  };

  const auto count = static_cast<std::ptrdiff_t>(n_estimators);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < count; ++t) fit_one(static_cast<std::size_t>(t));
  } else {
    for (std::ptrdiff_t t = 0; t < count; ++t) fit_one(static_cast<std::size_t>(t));
  }
  return forest;
}

GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y, int rounds,
                 double learning_rate, const TreeParams& params) {
  check_aligned(x, y);
  params.validate();
  if (rounds < 0) throw UsageError(kModule, "rounds must be nonnegative");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw UsageError(kModule, "learning_rate must lie in (0, 1]");
  }
  GbtModel model;
  model.learning_rate = learning_rate;
  model.params = params;
  const std::size_t n = x.rows();
  model.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> current(n, model.base_prediction);
  std::vector<double> residual(n);
  for (int round = 0; round < rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - current[i];
    TreeParams stage_params = params;
    stage_params.seed = mix_seed(params.seed, static_cast<std::uint64_t>(round));
    auto stage = fit_decision_tree(x, residual, stage_params);
    for (std::size_t i = 0; i < n; ++i) current[i] += learning_rate * stage.predict_row(x.row(i));
    model.stages.push_back(std::move(stage));
  }
  return model;
}

std::vector<double> predict(const DecisionTree& tree, const FeatureMatrix& x) {
  check_width(tree.n_features(), x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = tree.predict_row(x.row(r));
  return out;
}

std::vector<double> predict(const ForestModel& forest, const FeatureMatrix& x, Execution exec) {
  if (forest.trees.empty()) throw UsageError(kModule, "forest has no trees");
  check_width(forest.trees.front().n_features(), x);
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  std::vector<double> out(x.rows());
  const double scale = 1.0 / static_cast<double>(forest.trees.size());
  auto predict_row = [&](std::size_t r) {
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict_row(x.row(r));
    out[r] = sum * scale;
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) predict_row(static_cast<std::size_t>(r));
  } else {
    for (std::ptrdiff_t r = 0; r < n; ++r) predict_row(static_cast<std::size_t>(r));
  }
  return out;
}

std::vector<double> predict_staged(const GbtModel& model, const FeatureMatrix& x,
                                   std::size_t n_stages) {
  n_stages = std::min(n_stages, model.stages.size());
  if (!model.stages.empty()) check_width(model.stages.front().n_features(), x);
  std::vector<double> out(x.rows(), model.base_prediction);
  for (std::size_t s = 0; s < n_stages; ++s) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      out[r] += model.learning_rate * model.stages[s].predict_row(x.row(r));
    }
  }
  return out;
}

std::vector<double> predict(const GbtModel& model, const FeatureMatrix& x) {
  return predict_staged(model, x, model.stages.size());
}

Json tree_params_to_json(const TreeParams& p) {
  Json j;
  if (p.max_depth) {
    j["max_depth"] = *p.max_depth;
  } else {
    j["max_depth"] = "unlimited";
  }
  j["min_samples_split"] = p.min_samples_split;
  j["max_features"] = to_string(p.max_features);
  j["seed"] = p.seed;
  return j;
}

TreeParams tree_params_from_json(const Json& j) {
  TreeParams p;
  const auto& depth = j.at("max_depth");
  if (depth.is_number()) p.max_depth = depth.get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.max_features = max_features_from_string(j.at("max_features").get<std::string>());
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

}  // namespace coldstart
