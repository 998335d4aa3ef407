#include "coldstart/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coldstart/errors.hpp"
#include "coldstart/random.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "evaluate";

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

KMeansResult kmeans_cluster(std::span<const double> points, std::size_t dims, std::size_t k,
                            std::uint64_t seed, int max_iter, double tol) {
  if (dims == 0 || points.size() % dims != 0) throw UsageError(kModule, "points are not n x dims");
  const std::size_t n = points.size() / dims;
  if (k == 0 || k > n) {
    throw UsageError(kModule, "k must lie in [1, n]; got k=" + std::to_string(k) + " n=" + std::to_string(n));
  }
  for (double v : points) {
    if (!std::isfinite(v)) throw DataError(kModule, "k-means points must be finite");
  }
  const double* pts = points.data();
  Rng rng(seed);

  KMeansResult out;
  out.dims = dims;
  out.centroids.assign(k * dims, 0.0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  // k-means++: first center uniform, later centers proportional to D^2.
  std::size_t first = rng.uniform_index(n);
  std::copy_n(pts + first * dims, dims, out.centroids.begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(pts + i * dims, &out.centroids[(c - 1) * dims], dims));
      total += nearest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform01() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_index(n);
    }
    std::copy_n(pts + pick * dims, dims, out.centroids.begin() + static_cast<std::ptrdiff_t>(c * dims));
  }

  out.assignments.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(n);
  for (int iter = 0; iter < max_iter; ++iter) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < count; ++s) {
      const auto i = static_cast<std::size_t>(s);
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 = squared_distance(pts + i * dims, &out.centroids[c * dims], dims);
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      out.assignments[i] = best_c;
      dist[i] = best;
    }
    double inertia = 0.0;
    for (double d2 : dist) inertia += d2;
    out.inertia = inertia;
    out.inertia_history.push_back(inertia);
    out.iterations = iter + 1;

    std::vector<double> sums(k * dims, 0.0);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = out.assignments[i];
      ++sizes[c];
      for (std::size_t d = 0; d < dims; ++d) sums[c * dims + d] += pts[i * dims + d];
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> updated(dims);
      if (sizes[c] == 0) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (dist[i] > dist[far]) far = i;
        }
        std::copy_n(pts + far * dims, dims, updated.begin());
        dist[far] = 0.0;
      } else {
        for (std::size_t d = 0; d < dims; ++d) {
          updated[d] = sums[c * dims + d] / static_cast<double>(sizes[c]);
        }
      }
      max_shift = std::max(max_shift, std::sqrt(squared_distance(updated.data(), &out.centroids[c * dims], dims)));
      std::copy(updated.begin(), updated.end(), out.centroids.begin() + static_cast<std::ptrdiff_t>(c * dims));
    }
    if (max_shift < tol) break;
  }
  return out;
}

}  // namespace coldstart
