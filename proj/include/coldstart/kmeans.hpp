#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace coldstart {

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<double> centroids;  // k x d, row-major
  std::size_t dims = 0;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;  // after each assignment step
};

// k-means++ seeding followed by Lloyd iterations until every centroid moves
// less than tol or max_iter is reached. An empty cluster is reseeded at the
// point farthest from its current centroid. `points` is n x dims row-major.
KMeansResult kmeans_cluster(std::span<const double> points, std::size_t dims, std::size_t k,
                            std::uint64_t seed, int max_iter = 100, double tol = 1e-6);

}  // namespace coldstart
