#include "coldstart/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coldstart/errors.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "model_linear";

}  // namespace

double soft_threshold(double z, double gamma) {
  if (gamma < 0.0) throw UsageError(kModule, "soft_threshold needs gamma >= 0");
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

double elastic_net_objective(const FeatureMatrix& x, std::span<const double> y,
                             const LinearModel& model) {
  const auto prediction = predict(model, x);
  double rss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - prediction[i];
    rss += r * r;
  }
  double l1 = 0.0;
  double l2 = 0.0;
  for (double b : model.coefficients) {
    l1 += std::abs(b);
    l2 += b * b;
  }
  return rss / (2.0 * static_cast<double>(y.size())) + model.alpha * model.l1_ratio * l1 +
         0.5 * model.alpha * (1.0 - model.l1_ratio) * l2;
}

LinearModel fit_linear(const FeatureMatrix& x, std::span<const double> y, double alpha,
                       double l1_ratio, const LinearFitOptions& options) {
  if (x.rows() != y.size()) throw UsageError(kModule, "feature matrix and target are misaligned");
  if (x.rows() == 0) throw UsageError(kModule, "cannot fit on zero rows");
  if (!(alpha >= 0.0)) throw UsageError(kModule, "alpha must be nonnegative");
  if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0)) throw UsageError(kModule, "l1_ratio must lie in [0, 1]");
  if (!(options.tol > 0.0)) throw UsageError(kModule, "tol must be positive");

  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double l1_penalty = alpha * l1_ratio;
  const double l2_penalty = alpha * (1.0 - l1_ratio);

  // Column-major copy for the coordinate sweeps.
  std::vector<double> cols(n * p);
  std::vector<double> col_sq(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x(i, j);
      cols[j * n + i] = v;
      col_sq[j] += v * v;
    }
    col_sq[j] *= inv_n;
  }

  LinearModel model;
  model.alpha = alpha;
  model.l1_ratio = l1_ratio;
  model.coefficients.assign(p, 0.0);
  model.intercept = std::accumulate(y.begin(), y.end(), 0.0) * inv_n;

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - model.intercept;

  for (int sweep = 0; sweep < options.max_iter; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double* col = &cols[j * n];
      const double old = model.coefficients[j];
      const double denom = col_sq[j] + l2_penalty;
      if (denom <= 0.0) continue;  // all-zero column with no ridge term
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += col[i] * residual[i];
      rho = rho * inv_n + col_sq[j] * old;
      const double updated = soft_threshold(rho, l1_penalty) / denom;
      const double delta = updated - old;
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * col[i];
        model.coefficients[j] = updated;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    const double shift = std::accumulate(residual.begin(), residual.end(), 0.0) * inv_n;
    model.intercept += shift;
    for (auto& r : residual) r -= shift;
    max_change = std::max(max_change, std::abs(shift));

    model.n_iterations = sweep + 1;
    if (options.on_sweep) options.on_sweep(sweep, elastic_net_objective(x, y, model));
    if (max_change < options.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

std::vector<double> predict(const LinearModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.coefficients.size()) {
    throw UsageError(kModule, "model expects " + std::to_string(model.coefficients.size()) +
                                  " features, got " + std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows(), model.intercept);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) out[r] += model.coefficients[j] * row[j];
  }
  return out;
}

Json LinearModel::to_json() const {
  return {{"coefficients", coefficients}, {"intercept", intercept}, {"alpha", alpha},
          {"l1_ratio", l1_ratio},         {"converged", converged}, {"n_iterations", n_iterations}};
}

LinearModel LinearModel::from_json(const Json& j) {
  LinearModel m;
  try {
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.alpha = j.at("alpha").get<double>();
    m.l1_ratio = j.at("l1_ratio").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.n_iterations = j.at("n_iterations").get<int>();
  } catch (const Json::exception& e) {
    throw DataError(kModule, std::string("malformed linear model: ") + e.what());
  }
  return m;
}

}  // namespace coldstart
