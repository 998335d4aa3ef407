#include <cmath>

#include "coldstart/errors.hpp"
#include "coldstart/linear.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coldstart;
using testing::matrix;

namespace {

// KKT residual of coordinate j for the elastic-net objective.
double gradient(const FeatureMatrix& x, std::span<const double> y, const LinearModel& m, std::size_t j) {
  const auto yhat = predict(m, x);
  double g = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) g -= x(i, j) * (y[i] - yhat[i]);
  g /= static_cast<double>(x.rows());
  return g + m.alpha * (1.0 - m.l1_ratio) * m.coefficients[j];
}

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(3, 1) == 2);
  CHECK(soft_threshold(-3, 1) == -2);
  CHECK(soft_threshold(-0.5, 1) == 0);
  CHECK(soft_threshold(1.25, 0) == 1.25);
  CHECK_THROWS(soft_threshold(1, -1));
}

TEST_CASE("noiseless OLS recovers slope and intercept") {
  const auto x = matrix({{0}, {1}, {2}, {3}, {4}});
  const std::vector<double> y = {1, 3, 5, 7, 9};
  const auto m = fit_linear(x, y, 0.0, 0.5, {});
  CHECK(m.converged);
  CHECK(m.coefficients[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(m.intercept == doctest::Approx(1.0).epsilon(1e-6));
  const auto pred = predict(m, x);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(pred[i] - y[i]) <= 1e-6 * 10);
}

TEST_CASE("lasso shuts down above the analytic threshold") {
  Rng rng(7);
  const auto x = testing::random_matrix(30, 4, rng);
  std::vector<double> y(30);
  double mean = 0.0;
  for (std::size_t i = 0; i < 30; ++i) {
    y[i] = 2 * x(i, 0) - x(i, 3) + rng.normal();
    mean += y[i];
  }
  mean /= 30;
  double alpha_max = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    double g = 0.0;
    for (std::size_t i = 0; i < 30; ++i) g += x(i, j) * (y[i] - mean);
    alpha_max = std::max(alpha_max, std::abs(g) / 30);
  }
  const auto m = fit_linear(x, y, alpha_max * 1.0001, 1.0, {});
  for (double b : m.coefficients) CHECK(b == 0.0);
  CHECK(m.intercept == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("ridge matches the dense closed-form solve") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = trial < 10 ? 6 : 10;
    const std::size_t p = trial < 10 ? 3 : 4;
    const auto x = testing::random_matrix(n, p, rng);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.normal() * 3 + 1;
    const double alpha = 0.05 + rng.uniform01();
    LinearFitOptions options;
    options.tol = 1e-10;
    const auto m = fit_linear(x, y, alpha, 0.0, options);
    const auto [beta, b0] = testing::ridge_oracle(x, y, alpha);
    for (std::size_t j = 0; j < p; ++j) REQUIRE(std::abs(m.coefficients[j] - beta[j]) <= 1e-6);
    REQUIRE(std::abs(m.intercept - b0) <= 1e-6);
  }
}

TEST_CASE("alpha = 0 reproduces the normal equations for any mixing ratio") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testing::random_matrix(25, 3, rng);
    std::vector<double> y(25);
    for (auto& v : y) v = rng.normal();
    LinearFitOptions options;
    options.tol = 1e-10;
    const auto m = fit_linear(x, y, 0.0, 0.1 * trial, options);
    const auto [beta, b0] = testing::ridge_oracle(x, y, 0.0);
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(std::abs(m.coefficients[j] - beta[j]) <= 1e-6);
    REQUIRE(std::abs(m.intercept - b0) <= 1e-6);
  }
}

TEST_CASE("lasso and elastic net satisfy KKT; objective never increases") {
  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20 + rng.uniform_index(40);
    const std::size_t p = 2 + rng.uniform_index(6);
    const auto x = testing::random_matrix(n, p, rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 0) * 3 - x(i, 1) + rng.normal();
    const double alpha = std::pow(10.0, -2.0 + 2.5 * rng.uniform01());
    const double l1 = trial % 2 ? 1.0 : 0.5;
    LinearFitOptions options;
    double prev = INFINITY;
    bool monotone = true;
    options.on_sweep = [&](int, double objective) {
      if (objective > prev * (1 + 1e-12) + 1e-15) monotone = false;
      prev = objective;
    };
    const auto m = fit_linear(x, y, alpha, l1, options);
    REQUIRE(monotone);
    REQUIRE(m.converged);
    for (std::size_t j = 0; j < p; ++j) {
      const double g = gradient(x, y, m, j);
      if (m.coefficients[j] == 0.0) {
        REQUIRE(std::abs(g) <= alpha * l1 + 10 * options.tol);
      } else {
        REQUIRE(std::abs(g + alpha * l1 * (m.coefficients[j] > 0 ? 1 : -1)) <= 10 * options.tol);
      }
    }
  }
}

TEST_CASE("ridge coefficients shrink with alpha on an orthogonal design") {
  // Columns are orthogonal with unit mean square.
  const auto x = matrix({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
  const std::vector<double> y = {3, 1, 0, -2};
  double prev = INFINITY;
  for (double alpha : {0.0, 0.1, 0.5, 1.0, 5.0}) {
    LinearFitOptions options;
    options.tol = 1e-12;
    const auto m = fit_linear(x, y, alpha, 0.0, options);
    const double norm = std::hypot(m.coefficients[0], m.coefficients[1]);
    CHECK(norm < prev);
    prev = norm;
  }
}

TEST_CASE("predict examples and JSON round trip") {
  LinearModel m;
  m.coefficients = {1, 1};
  m.intercept = 0;
  CHECK(predict(m, matrix({{2, 3}}))[0] == 5);
  LinearModel c;
  c.coefficients = {0, 0};
  c.intercept = 4.5;
  CHECK(predict(c, matrix({{1, 2}, {3, 4}})) == std::vector<double>{4.5, 4.5});
  m.intercept = 0.1;
  m.coefficients = {1.0 / 3.0, -2e-17};
  const auto back = LinearModel::from_json(Json::parse(m.to_json().dump()));
  CHECK(back.coefficients == m.coefficients);
  CHECK(back.intercept == m.intercept);
}

TEST_CASE("invalid linear hyperparameters") {
  const auto x = matrix({{1}, {2}});
  const std::vector<double> y = {1, 2};
  CHECK_THROWS_AS(fit_linear(x, y, -1.0, 0.5, {}), UsageError);
  CHECK_THROWS_AS(fit_linear(x, y, 1.0, 1.5, {}), UsageError);
}
