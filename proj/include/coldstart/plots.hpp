#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coldstart/importance.hpp"
#include "coldstart/metrics.hpp"

namespace coldstart {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y ~ x via the alpha = 0 coordinate-descent fit on a
// standardized copy of x.
LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

struct ScatterSeries {
  std::vector<double> actual;
  std::vector<double> predicted;
};

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::optional<double>> values;  // row-major; nullopt where undefined
};

// Pearson correlations between the given columns (all of equal length).
CorrelationMatrix correlation_matrix(std::vector<std::string> names,
                                     const std::vector<std::vector<double>>& columns);

struct PlotData {
  std::optional<ScatterSeries> scatter;
  std::optional<CorrelationMatrix> correlation;
  std::optional<ImportanceReport> importance;
  std::optional<ErrorBuckets> buckets_before;
  std::optional<ErrorBuckets> buckets_after;
};

std::string scatter_svg(const ScatterSeries& series, const std::string& title);
std::string heatmap_svg(const CorrelationMatrix& matrix, const std::string& title);
std::string importance_svg(const ImportanceReport& report, const std::string& title);
std::string buckets_svg(const ErrorBuckets& before, const std::optional<ErrorBuckets>& after,
                        const std::string& title);

// Writes actual_vs_predicted.svg, correlation_heatmap.svg,
// feature_importance.svg and error_buckets.svg into `directory`. Missing
// sections are skipped; the returned notes name what was skipped.
std::vector<std::string> emit_plots(const PlotData& data, const std::string& directory);

}  // namespace coldstart
