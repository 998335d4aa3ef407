#include <cmath>

#include "coldstart/errors.hpp"
#include "coldstart/kmeans.hpp"
#include "coldstart/metrics.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coldstart;

TEST_CASE("mape examples") {
  CHECK(mape(std::vector<double>{100, 200, 400}, std::vector<double>{110, 180, 440}) ==
        doctest::Approx(10.0).epsilon(1e-14));
  CHECK(mape(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  const auto d = mape_detail(std::vector<double>{0, 100}, std::vector<double>{5, 100});
  CHECK(d.percent == 0.0);
  CHECK(d.n_excluded_zero_target == 1);
  CHECK(d.n_scored == 1);
  CHECK_THROWS_AS(mape(std::vector<double>{0, 0}, std::vector<double>{1, 1}), DataError);
}

TEST_CASE("smape examples") {
  CHECK(smape(std::vector<double>{100}, std::vector<double>{300}) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(smape(std::vector<double>{5, 6}, std::vector<double>{5, 6}) == 0.0);
  CHECK(smape(std::vector<double>{0}, std::vector<double>{0}) == 0.0);
}

TEST_CASE("r2 examples") {
  const std::vector<double> y = {1, 2, 3};
  CHECK(r2(y, y) == 1.0);
  CHECK(r2(y, std::vector<double>{2, 2, 2}) == 0.0);
  CHECK(r2(y, std::vector<double>{1, 2, 5}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(r2(std::vector<double>{3, 3}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("pearson examples") {
  const std::vector<double> a = {1, 2, 3};
  CHECK(pearson(a, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(a, std::vector<double>{6, 4, 2}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(a, std::vector<double>{1, 3, 2}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1, 1, 1}), DataError);
}

TEST_CASE("metric properties on random vectors") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = std::exp(rng.normal() * 2);
      p[i] = y[i] * std::exp(rng.normal() * 0.5);
    }
    REQUIRE(smape(y, p) == doctest::Approx(smape(p, y)).epsilon(1e-12));
    const double r = pearson(y, p);
    const double a = 3.5, b = -7.0;
    std::vector<double> moved(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      moved[i] = a * p[i] + b;
      flipped[i] = -p[i];
    }
    REQUIRE(std::abs(pearson(y, moved) - r) <= 1e-12);
    REQUIRE(std::abs(pearson(y, flipped) + r) <= 1e-12);
    REQUIRE(error_buckets(y, p).total() == n);
  }
}

TEST_CASE("error buckets") {
  const auto b = error_buckets(std::vector<double>{100, 100, 100}, std::vector<double>{105, 115, 145});
  CHECK(b.counts == std::array<std::size_t, 5>{1, 1, 0, 0, 1});
  std::vector<double> y(50, 7.0);
  CHECK(error_buckets(y, y).counts == std::array<std::size_t, 5>{50, 0, 0, 0, 0});
  CHECK(error_buckets(std::vector<double>{100}, std::vector<double>{110}).counts[1] == 1);
  CHECK(ErrorBuckets::labels().size() == 5);
}

TEST_CASE("compute_metrics reports undefined r2 as absent") {
  const auto m = compute_metrics(std::vector<double>{5}, std::vector<double>{4});
  CHECK_FALSE(m.r2.has_value());
  CHECK(m.mape == doctest::Approx(20.0).epsilon(1e-14));
}

TEST_CASE("kmeans examples") {
  const std::vector<double> pts = {0, 0, 2, 0, 0, 2, 2, 2};
  const auto one = kmeans_cluster(pts, 2, 1, 1);
  CHECK(one.centroids[0] == doctest::Approx(1.0));
  CHECK(one.centroids[1] == doctest::Approx(1.0));
  const auto all = kmeans_cluster(pts, 2, 4, 1);
  CHECK(all.inertia == doctest::Approx(0.0));

  Rng rng(2);
  std::vector<double> blobs;
  std::vector<int> truth;
  for (int i = 0; i < 60; ++i) {
    const int g = i % 2;
    blobs.push_back(g * 100.0 + rng.normal());
    blobs.push_back(g * -50.0 + rng.normal());
    truth.push_back(g);
  }
  const auto r = kmeans_cluster(blobs, 2, 2, 3);
  for (int i = 1; i < 60; ++i) {
    CHECK((r.assignments[static_cast<std::size_t>(i)] == r.assignments[0]) == (truth[static_cast<std::size_t>(i)] == truth[0]));
  }
}

TEST_CASE("kmeans inertia is non-increasing per iteration") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(rng.normal() * (1 + i % 5));
    const auto r = kmeans_cluster(pts, 2, 2 + static_cast<std::size_t>(trial % 5), rng.next_u64());
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      REQUIRE(r.inertia_history[i] <= r.inertia_history[i - 1] * (1 + 1e-12));
    }
  }
}
