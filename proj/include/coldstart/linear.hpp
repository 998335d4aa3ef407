#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/serialization.hpp"

namespace coldstart {

// Elastic-net linear model. alpha = 0 is ordinary least squares; l1_ratio = 1
// is the lasso and l1_ratio = 0 is ridge.
struct LinearModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double alpha = 0.0;
  double l1_ratio = 1.0;
  bool converged = false;
  int n_iterations = 0;

  Json to_json() const;
  static LinearModel from_json(const Json& j);
};

struct LinearFitOptions {
  double tol = 1e-6;
  int max_iter = 10000;
  // Called after every full sweep with (sweep index, objective value).
  std::function<void(int, double)> on_sweep;
};

// sign(z) * max(|z| - gamma, 0)
double soft_threshold(double z, double gamma);

// Value of (1/2n)||y - b0 - Xb||^2 + alpha*l1*||b||_1 + alpha*(1-l1)/2*||b||^2.
double elastic_net_objective(const FeatureMatrix& x, std::span<const double> y,
                             const LinearModel& model);

// Cyclic coordinate descent; the unpenalized intercept is reset to the mean
// residual after each sweep. Stops when the largest coefficient change in a
// sweep is below tol; hitting max_iter leaves converged = false.
LinearModel fit_linear(const FeatureMatrix& x, std::span<const double> y, double alpha,
                       double l1_ratio, const LinearFitOptions& options = {});

std::vector<double> predict(const LinearModel& model, const FeatureMatrix& x);

}  // namespace coldstart
