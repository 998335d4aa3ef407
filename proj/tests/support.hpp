#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <cmath>
#include <filesystem>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/random.hpp"
#include "coldstart/tree.hpp"

namespace testing {

inline coldstart::FeatureMatrix matrix(const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> names;
  const std::size_t p = rows.empty() ? 0 : rows.front().size();
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  std::vector<double> values;
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  return coldstart::FeatureMatrix(rows.size(), std::move(names), std::move(values));
}

inline coldstart::FeatureMatrix random_matrix(std::size_t n, std::size_t p, coldstart::Rng& rng) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (auto& r : rows) {
    for (auto& v : r) v = rng.normal();
  }
  return matrix(rows);
}

// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    std::swap(a[c], a[pivot]);
    std::swap(b[c], b[pivot]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Ridge with an unpenalized intercept via centering:
// (Xc'Xc/n + alpha I) beta = Xc'yc/n, b0 = mean(y) - mean(X) beta.
inline std::pair<std::vector<double>, double> ridge_oracle(const coldstart::FeatureMatrix& x,
                                                          const std::vector<double>& y, double alpha) {
  const std::size_t n = x.rows(), p = x.cols();
  std::vector<double> mx(p, 0.0);
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    my += y[i];
    for (std::size_t j = 0; j < p; ++j) mx[j] += x(i, j);
  }
  my /= static_cast<double>(n);
  for (auto& m : mx) m /= static_cast<double>(n);
  std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
  std::vector<double> b(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double xj = x(i, j) - mx[j];
      b[j] += xj * (y[i] - my) / static_cast<double>(n);
      for (std::size_t k = 0; k < p; ++k) a[j][k] += xj * (x(i, k) - mx[k]) / static_cast<double>(n);
    }
  }
  for (std::size_t j = 0; j < p; ++j) a[j][j] += alpha;
  auto beta = dense_solve(a, b);
  double b0 = my;
  for (std::size_t j = 0; j < p; ++j) b0 -= mx[j] * beta[j];
  return {beta, b0};
}

// Days since 1970-01-01 for a proleptic Gregorian date, counted month by month.
inline long days_from_epoch(int y, int m, int d) {
  auto leap = [](int yr) { return (yr % 4 == 0 && yr % 100 != 0) || yr % 400 == 0; };
  static const int kMonthDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  long days = 0;
  for (int yr = 1970; yr < y; ++yr) days += leap(yr) ? 366 : 365;
  for (int mo = 1; mo < m; ++mo) days += kMonthDays[mo - 1] + (mo == 2 && leap(y) ? 1 : 0);
  return days + d - 1;
}

// 1970-01-01 was a Thursday (Monday = 0 -> Thursday = 3).
inline int weekday_monday0(int y, int m, int d) {
  return static_cast<int>((days_from_epoch(y, m, d) + 3) % 7);
}

// Exhaustive search: every feature, every midpoint between consecutive
// distinct values, decrease = Var(parent) - weighted child variances.
inline std::optional<coldstart::SplitCandidate> brute_force_split(const coldstart::FeatureMatrix& x, const std::vector<double>& y) {
  const std::size_t n = x.rows();
  auto variance = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double m = 0.0;
    for (double a : v) m += a;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double a : v) s += (a - m) * (a - m);
    return s / static_cast<double>(v.size());
  };
  const double parent = variance(y);
  std::optional<coldstart::SplitCandidate> best;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::set<double> distinct;
    for (std::size_t i = 0; i < n; ++i) distinct.insert(x(i, j));
    std::vector<double> vals(distinct.begin(), distinct.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      double t = std::midpoint(vals[k], vals[k + 1]);
      if (!(t < vals[k + 1])) t = vals[k];
      std::vector<double> left, right;
      for (std::size_t i = 0; i < n; ++i) (x(i, j) <= t ? left : right).push_back(y[i]);
      const double d = parent - (static_cast<double>(left.size()) * variance(left) +
                                 static_cast<double>(right.size()) * variance(right)) /
                                    static_cast<double>(n);
      if (!best || d > best->impurity_decrease + coldstart::kSplitTieTolerance * parent) {
        best = coldstart::SplitCandidate{j, t, d};
      }
    }
  }
  if (best && !(best->impurity_decrease > coldstart::kSplitTieTolerance * parent)) return std::nullopt;
  return best;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("coldstart_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
