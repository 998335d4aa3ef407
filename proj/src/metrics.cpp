#include "coldstart/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "coldstart/errors.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "evaluate";

void check_aligned(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw UsageError(kModule, "vectors differ in length (" + std::to_string(a.size()) + " vs " +
                                  std::to_string(b.size()) + ")");
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

MapeResult mape_detail(std::span<const double> y, std::span<const double> y_hat) {
  check_aligned(y, y_hat);
  MapeResult out;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) {
      ++out.n_excluded_zero_target;
      continue;
    }
    sum += std::abs(y[i] - y_hat[i]) / std::abs(y[i]);
    ++out.n_scored;
  }
  if (out.n_scored == 0) throw DataError(kModule, "MAPE is undefined when every target is zero");
  out.percent = 100.0 * sum / static_cast<double>(out.n_scored);
  return out;
}

double mape(std::span<const double> y, std::span<const double> y_hat) {
  return mape_detail(y, y_hat).percent;
}

double smape(std::span<const double> y, std::span<const double> y_hat) {
  check_aligned(y, y_hat);
  if (y.empty()) throw DataError(kModule, "SMAPE of an empty vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double denom = std::abs(y[i]) + std::abs(y_hat[i]);
    if (denom > 0.0) sum += 2.0 * std::abs(y[i] - y_hat[i]) / denom;
  }
  return 100.0 * sum / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> y_hat) {
  check_aligned(y, y_hat);
  if (y.size() < 2) throw DataError(kModule, "R^2 needs at least two rows");
  const double mean = mean_of(y);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw DataError(kModule, "R^2 is undefined for a constant target");
  return 1.0 - ss_res / ss_tot;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_aligned(a, b);
  if (a.size() < 2) throw DataError(kModule, "Pearson correlation needs at least two points");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw DataError(kModule, "Pearson correlation is undefined for a constant vector");
  }
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

std::size_t ErrorBuckets::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::array<const char*, 5> ErrorBuckets::labels() {
  return {"<10%", "10%-20%", "20%-30%", "30%-40%", ">40%"};
}

Json ErrorBuckets::to_json() const {
  Json rows = Json::array();
  const auto names = labels();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    rows.push_back({{"bucket", names[i]}, {"episodes", counts[i]}});
  }
  return rows;
}

ErrorBuckets error_buckets(std::span<const double> y, std::span<const double> y_hat) {
  check_aligned(y, y_hat);
  ErrorBuckets b;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) continue;
    ++scored;
    const double pct = 100.0 * std::abs(y[i] - y_hat[i]) / std::abs(y[i]);
    std::size_t slot = 0;
    while (slot < ErrorBuckets::kEdges.size() && pct >= ErrorBuckets::kEdges[slot]) ++slot;
    ++b.counts[slot];
  }
  if (scored == 0) throw DataError(kModule, "error buckets are undefined when every target is zero");
  return b;
}

Json MetricReport::to_json() const {
  Json j;
  j["mape"] = mape;
  j["smape"] = smape;
  j["r2"] = r2 ? Json(*r2) : Json(nullptr);
  j["n_scored"] = n_scored;
  j["n_excluded_zero_target"] = n_excluded_zero_target;
  return j;
}

MetricReport compute_metrics(std::span<const double> y, std::span<const double> y_hat) {
  const auto m = mape_detail(y, y_hat);
  MetricReport out;
  out.mape = m.percent;
  out.n_scored = m.n_scored;
  out.n_excluded_zero_target = m.n_excluded_zero_target;
  out.smape = smape(y, y_hat);
  try {
    out.r2 = r2(y, y_hat);
  } catch (const DataError&) {
    out.r2.reset();
  }
  return out;
}

}  // namespace coldstart
