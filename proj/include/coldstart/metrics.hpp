#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "coldstart/serialization.hpp"

namespace coldstart {

struct MapeResult {
  double percent = 0.0;
  std::size_t n_scored = 0;
  std::size_t n_excluded_zero_target = 0;
};

// Mean absolute percentage error over rows with a nonzero target; zero-target
// rows are skipped and counted. Throws when every target is zero.
MapeResult mape_detail(std::span<const double> y, std::span<const double> y_hat);
double mape(std::span<const double> y, std::span<const double> y_hat);

// 100/n * sum 2|y - y_hat| / (|y| + |y_hat|), a 0/0 term counting as 0.
double smape(std::span<const double> y, std::span<const double> y_hat);

// 1 - SS_res / SS_tot. Throws for n < 2 or constant y.
double r2(std::span<const double> y, std::span<const double> y_hat);

// Sample Pearson correlation. Throws for n < 2 or a constant vector.
double pearson(std::span<const double> a, std::span<const double> b);

// Absolute percentage errors binned at 10/20/30/40 percent, lower-inclusive:
// [0,10) [10,20) [20,30) [30,40) [40,inf). Zero-target rows are skipped.
struct ErrorBuckets {
  static constexpr std::array<double, 4> kEdges = {10.0, 20.0, 30.0, 40.0};
  std::array<std::size_t, 5> counts{};

  std::size_t total() const;
  static std::array<const char*, 5> labels();
  Json to_json() const;
};

ErrorBuckets error_buckets(std::span<const double> y, std::span<const double> y_hat);

struct MetricReport {
  double mape = 0.0;
  double smape = 0.0;
  std::optional<double> r2;  // undefined for constant or single-row targets
  std::size_t n_scored = 0;
  std::size_t n_excluded_zero_target = 0;

  Json to_json() const;
};

MetricReport compute_metrics(std::span<const double> y, std::span<const double> y_hat);

}  // namespace coldstart
