#include "coldstart/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coldstart/errors.hpp"
#include "coldstart/linear.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "cli_report";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string header(int width, int height, const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
    << escape_xml(title) << "</text>\n";
  return s.str();
}

// Blue for negative, red for positive correlation.
std::string heat_color(double r) {
  const double t = std::clamp(std::abs(r), 0.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  char buf[16];
  if (r >= 0) {
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
  } else {
    std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
  }
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw DataError(kModule, "cannot write '" + path.string() + "'");
}

}  // namespace

LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw UsageError(kModule, "a regression line needs two aligned vectors of length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 0.0)) {
    double my = 0.0;
    for (double v : y) my += v;
    return {0.0, my / n};
  }
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;
  const FeatureMatrix design(x.size(), {"x"}, std::move(z));
  LinearFitOptions options;
  options.tol = 1e-12;
  const auto model = fit_linear(design, y, 0.0, 0.0, options);
  const double slope = model.coefficients[0] / sd;
  return {slope, model.intercept - slope * mean};
}

CorrelationMatrix correlation_matrix(std::vector<std::string> names,
                                     const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw UsageError(kModule, "correlation names/columns mismatch");
  CorrelationMatrix m;
  const std::size_t p = columns.size();
  m.values.assign(p * p, std::nullopt);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      try {
        const double r = i == j ? 1.0 : pearson(columns[i], columns[j]);
        if (i == j) pearson(columns[i], columns[i]);  // undefined for a constant column
        m.values[i * p + j] = r;
        m.values[j * p + i] = r;
      } catch (const DataError&) {
      }
    }
  }
  m.names = std::move(names);
  return m;
}

std::string scatter_svg(const ScatterSeries& series, const std::string& title) {
  constexpr int kW = 560, kH = 560, kPad = 60;
  std::ostringstream s;
  s << header(kW, kH, title);
  double lo = 0.0, hi = 1.0;
  if (!series.actual.empty()) {
    lo = std::min(*std::min_element(series.actual.begin(), series.actual.end()),
                  *std::min_element(series.predicted.begin(), series.predicted.end()));
    hi = std::max(*std::max_element(series.actual.begin(), series.actual.end()),
                  *std::max_element(series.predicted.begin(), series.predicted.end()));
    if (hi <= lo) hi = lo + 1.0;
  }
  const double span = kW - 2 * kPad;
  auto px = [&](double v) { return kPad + (v - lo) / (hi - lo) * span; };
  auto py = [&](double v) { return kH - kPad - (v - lo) / (hi - lo) * span; };
  s << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << span << "\" height=\"" << span
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << fmt(px(lo)) << "\" y1=\"" << fmt(py(lo)) << "\" x2=\"" << fmt(px(hi))
    << "\" y2=\"" << fmt(py(hi)) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  for (std::size_t i = 0; i < series.actual.size(); ++i) {
    s << "<circle cx=\"" << fmt(px(series.actual[i])) << "\" cy=\"" << fmt(py(series.predicted[i]))
      << "\" r=\"3\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  }
  if (series.actual.size() >= 2) {
    const auto line = least_squares_line(series.actual, series.predicted);
    s << "<line x1=\"" << fmt(px(lo)) << "\" y1=\"" << fmt(py(line.intercept + line.slope * lo))
      << "\" x2=\"" << fmt(px(hi)) << "\" y2=\"" << fmt(py(line.intercept + line.slope * hi))
      << "\" stroke=\"#d62728\"/>\n";
    s << "<text x=\"" << kPad << "\" y=\"" << kPad - 8 << "\" font-size=\"12\">fit: slope "
      << fmt(line.slope) << ", intercept " << fmt(line.intercept) << "</text>\n";
  }
  s << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 20 << "\" text-anchor=\"middle\" font-size=\"12\">actual views ["
    << fmt(lo) << ", " << fmt(hi) << "]</text>\n";
  s << "<text x=\"16\" y=\"" << kH / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << kH / 2
    << ")\" text-anchor=\"middle\">predicted views</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string heatmap_svg(const CorrelationMatrix& matrix, const std::string& title) {
  const int p = static_cast<int>(matrix.names.size());
  constexpr int kCell = 24, kLeft = 180, kTop = 180;
  const int w = kLeft + p * kCell + 20;
  const int h = kTop + p * kCell + 20;
  std::ostringstream s;
  s << header(w, h, title);
  for (int i = 0; i < p; ++i) {
    s << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + i * kCell + 16
      << "\" text-anchor=\"end\" font-size=\"10\">" << escape_xml(matrix.names[static_cast<std::size_t>(i)])
      << "</text>\n";
    const int cx = kLeft + i * kCell + 16;
    s << "<text x=\"" << cx << "\" y=\"" << kTop - 4 << "\" font-size=\"10\" transform=\"rotate(-60 " << cx
      << ' ' << kTop - 4 << ")\">" << escape_xml(matrix.names[static_cast<std::size_t>(i)]) << "</text>\n";
    for (int j = 0; j < p; ++j) {
      const auto& v = matrix.values[static_cast<std::size_t>(i * p + j)];
      s << "<rect x=\"" << kLeft + j * kCell << "\" y=\"" << kTop + i * kCell << "\" width=\"" << kCell
        << "\" height=\"" << kCell << "\" fill=\"" << (v ? heat_color(*v) : std::string("#dddddd"))
        << "\" stroke=\"white\"><title>" << (v ? fmt(*v) : std::string("n/a")) << "</title></rect>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string importance_svg(const ImportanceReport& report, const std::string& title) {
  const auto ranked = report.ranked();
  constexpr int kRow = 20, kLeft = 200, kBar = 360, kTop = 50;
  const int h = kTop + static_cast<int>(ranked.size()) * kRow + 30;
  std::ostringstream s;
  s << header(kLeft + kBar + 100, h, title);
  double top = 0.0;
  for (const auto& f : ranked) top = std::max(top, f.score);
  if (!(top > 0.0)) top = 1.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const int y = kTop + static_cast<int>(i) * kRow;
    const double len = std::max(0.0, ranked[i].score) / top * kBar;
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 14 << "\" text-anchor=\"end\" font-size=\"11\">"
      << escape_xml(ranked[i].name) << "</text>\n";
    s << "<rect x=\"" << kLeft << "\" y=\"" << y + 3 << "\" width=\"" << fmt(len) << "\" height=\""
      << kRow - 6 << "\" fill=\"#2ca02c\"/>\n";
    s << "<text x=\"" << fmt(kLeft + len + 4) << "\" y=\"" << y + 14 << "\" font-size=\"10\">"
      << fmt(ranked[i].score) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string buckets_svg(const ErrorBuckets& before, const std::optional<ErrorBuckets>& after,
                        const std::string& title) {
  constexpr int kW = 560, kH = 360, kLeft = 60, kBottom = 300, kGroup = 90;
  std::ostringstream s;
  s << header(kW, kH, title);
  std::size_t top = 1;
  for (auto c : before.counts) top = std::max(top, c);
  if (after) {
    for (auto c : after->counts) top = std::max(top, c);
  }
  const double scale = 220.0 / static_cast<double>(top);
  const auto labels = ErrorBuckets::labels();
  for (std::size_t b = 0; b < 5; ++b) {
    const int x = kLeft + static_cast<int>(b) * kGroup;
    const double h1 = static_cast<double>(before.counts[b]) * scale;
    s << "<rect x=\"" << x << "\" y=\"" << fmt(kBottom - h1) << "\" width=\"34\" height=\"" << fmt(h1)
      << "\" fill=\"#ff7f0e\"><title>" << before.counts[b] << "</title></rect>\n";
    if (after) {
      const double h2 = static_cast<double>(after->counts[b]) * scale;
      s << "<rect x=\"" << x + 36 << "\" y=\"" << fmt(kBottom - h2) << "\" width=\"34\" height=\"" << fmt(h2)
        << "\" fill=\"#1f77b4\"><title>" << after->counts[b] << "</title></rect>\n";
    }
    s << "<text x=\"" << x + 35 << "\" y=\"" << kBottom + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << escape_xml(labels[b]) << "</text>\n";
  }
  s << "<rect x=\"" << kLeft << "\" y=\"330\" width=\"12\" height=\"12\" fill=\"#ff7f0e\"/>"
    << "<text x=\"" << kLeft + 16 << "\" y=\"341\" font-size=\"11\">before ensembling</text>\n";
  if (after) {
    s << "<rect x=\"" << kLeft + 160 << "\" y=\"330\" width=\"12\" height=\"12\" fill=\"#1f77b4\"/>"
      << "<text x=\"" << kLeft + 176 << "\" y=\"341\" font-size=\"11\">after ensembling</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<std::string> emit_plots(const PlotData& data, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw DataError(kModule, "cannot create '" + directory + "': " + ec.message());
  const fs::path dir(directory);
  std::vector<std::string> notes;
  if (data.scatter && !data.scatter->actual.empty()) {
    write_file(dir / "actual_vs_predicted.svg", scatter_svg(*data.scatter, "Actual vs predicted views"));
  } else {
    notes.push_back("scatter plot skipped: no predictions");
  }
  if (data.correlation && !data.correlation->names.empty()) {
    write_file(dir / "correlation_heatmap.svg", heatmap_svg(*data.correlation, "Pearson correlation"));
  } else {
    notes.push_back("correlation heatmap skipped: no numeric features");
  }
  if (data.importance && !data.importance->features.empty()) {
    write_file(dir / "feature_importance.svg", importance_svg(*data.importance, "Feature importance"));
  } else {
    notes.push_back("importance chart skipped: no importance report");
  }
  if (data.buckets_before) {
    write_file(dir / "error_buckets.svg",
               buckets_svg(*data.buckets_before, data.buckets_after, "Episodes by absolute percentage error"));
  } else {
    notes.push_back("error histogram skipped: no buckets");
  }
  return notes;
}

}  // namespace coldstart
