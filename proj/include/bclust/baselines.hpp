#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bclust/common.hpp"

namespace bclust {

// Classical clustering baselines over row matrices (one observation per
// row), plus the parameter sweeps used to give them their best shot.

struct KmeansResult {
  std::vector<int> labels;  // nearest-centroid index per row
  Matrix centroids;         // k x dim
  double sse = 0.0;         // sum of squared distances to assigned centroids
  int iterations = 0;
};

struct DbscanParams {
  double eps = 0.5;
  int min_pts = 5;
};

struct ElbowPoint {
  int k = 0;
  double sse = 0.0;
};

struct DbscanGridCell {
  DbscanParams params;
  double ari = 0.0;
  int n_clusters = 0;
  int n_noise = 0;
};

struct DbscanGridResult {
  DbscanParams best_params;
  double best_ari = 0.0;
  std::vector<DbscanGridCell> cells;  // every evaluated combination
};

/// Lloyd's algorithm from a k-means++ start; stops on an assignment fixpoint
/// or max_iter. Emptied clusters are reseeded to the point farthest from its
/// centroid. Deterministic given rng_seed.
KmeansResult kmeans(const Matrix& matrix, int k, int max_iter = 100, std::uint64_t rng_seed = 0);

/// Best-of-`restarts` SSE per k, post-processed with a running minimum so
/// the curve is non-increasing in k. k_values are sorted ascending.
std::vector<ElbowPoint> elbow_curve(const Matrix& matrix, std::span<const int> k_values,
                                    int restarts = 10, int max_iter = 100,
                                    std::uint64_t rng_seed = 0);

/// Density-reachability clustering; -1 marks noise. Border points join the
/// first core cluster that reaches them in row order.
std::vector<int> dbscan(const Matrix& matrix, const DbscanParams& params);

/// Evaluates every (eps, min_pts) combination against the reference labels
/// and returns the ARI-maximizing cell. Empty grids fall back to the
/// defaults: 20 evenly spaced eps in [0.1, 2] and min_pts 1..20.
DbscanGridResult dbscan_grid_search(const Matrix& matrix, std::span<const int> true_labels,
                                    std::span<const double> eps_grid = {},
                                    std::span<const int> minpts_grid = {});

}  // namespace bclust
