#include "bclust/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "bclust/metrics.hpp"
#include "bclust/parallel.hpp"
#include "bclust/rng.hpp"

namespace bclust {

namespace {

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> point) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), point);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// k-means++: each next center drawn with probability proportional to the
// squared distance from the centers already chosen.
Matrix kmeanspp_init(const Matrix& m, int k, Rng& rng) {
  const std::size_t n = m.rows();
  Matrix centroids(k, m.cols());
  std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());

  std::size_t first = rng.uniform_index(n);
  std::copy_n(m.row(first).begin(), m.cols(), centroids.row(0).begin());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_sq[i] = std::min(min_sq[i], squared_distance(m.row(i), centroids.row(c - 1)));
      total += min_sq[i];
    }
    std::size_t chosen;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_sq[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = rng.uniform_index(n);  // all points coincide with a center
    }
    std::copy_n(m.row(chosen).begin(), m.cols(), centroids.row(c).begin());
  }
  return centroids;
}

}  // namespace

KmeansResult kmeans(const Matrix& matrix, int k, int max_iter, std::uint64_t rng_seed) {
  const std::size_t n = matrix.rows();
  if (k < 1) throw DataError("kmeans: k must be positive");
  if (static_cast<std::size_t>(k) > n) {
    throw DataError("kmeans: k = " + std::to_string(k) + " exceeds " + std::to_string(n) +
                    " rows");
  }

  Rng rng(rng_seed);
  KmeansResult result;
  result.centroids = kmeanspp_init(matrix, k, rng);
  result.labels.assign(n, -1);

  std::vector<double> dist_to_own(n, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    result.sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto label = static_cast<int>(nearest_centroid(result.centroids, matrix.row(i)));
      if (label != result.labels[i]) {
        result.labels[i] = label;
        changed = true;
      }
      dist_to_own[i] = squared_distance(matrix.row(i), result.centroids.row(label));
      result.sse += dist_to_own[i];
    }
    result.iterations = iter + 1;
    if (!changed) break;

    Matrix sums(k, matrix.cols(), 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = result.labels[i];
      for (std::size_t j = 0; j < matrix.cols(); ++j) sums(c, j) += matrix(i, j);
      ++counts[c];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < matrix.cols(); ++j) {
          result.centroids(c, j) = sums(c, j) / counts[c];
        }
      } else {
        // Reseed an emptied cluster to the point that fits its current
        // centroid worst; this can only lower the SSE.
        std::size_t farthest = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (dist_to_own[i] > dist_to_own[farthest]) farthest = i;
        }
        std::copy_n(matrix.row(farthest).begin(), matrix.cols(), result.centroids.row(c).begin());
        dist_to_own[farthest] = 0.0;
      }
    }
  }
  return result;
}

std::vector<ElbowPoint> elbow_curve(const Matrix& matrix, std::span<const int> k_values,
                                    int restarts, int max_iter, std::uint64_t rng_seed) {
  if (restarts < 1) throw DataError("elbow_curve: restarts must be positive");
  std::vector<int> ks(k_values.begin(), k_values.end());
  std::sort(ks.begin(), ks.end());

  std::vector<ElbowPoint> curve(ks.size());
  parallel_for(ks.size(), [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
      const KmeansResult run = kmeans(matrix, ks[i], max_iter,
                                      derive_seed(rng_seed, static_cast<std::uint64_t>(ks[i]),
                                                  static_cast<std::uint64_t>(r)));
      best = std::min(best, run.sse);
    }
    curve[i] = {ks[i], best};
  });
  // Larger k can always reproduce a smaller k's partition, so enforce the
  // theoretical monotonicity that restart noise may hide.
  for (std::size_t i = 1; i < curve.size(); ++i) {
    curve[i].sse = std::min(curve[i].sse, curve[i - 1].sse);
  }
  return curve;
}

std::vector<int> dbscan(const Matrix& matrix, const DbscanParams& params) {
  if (params.eps <= 0.0) throw DataError("dbscan: eps must be positive");
  if (params.min_pts < 1) throw DataError("dbscan: min_pts must be positive");
  const std::size_t n = matrix.rows();
  const double eps_sq = params.eps * params.eps;

  const auto neighbors_of = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j) {
      if (squared_distance(matrix.row(i), matrix.row(j)) <= eps_sq) out.push_back(j);
    }
    return out;  // includes i itself
  };

  constexpr int kUnvisited = -2, kNoise = -1;
  std::vector<int> labels(n, kUnvisited);
  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    std::vector<std::size_t> seeds = neighbors_of(i);
    if (seeds.size() < static_cast<std::size_t>(params.min_pts)) {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = next_cluster++;
    labels[i] = cluster;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (labels[q] == kNoise) labels[q] = cluster;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      const std::vector<std::size_t> reach = neighbors_of(q);
      if (reach.size() >= static_cast<std::size_t>(params.min_pts)) {
        queue.insert(queue.end(), reach.begin(), reach.end());
      }
    }
  }
  return labels;
}

DbscanGridResult dbscan_grid_search(const Matrix& matrix, std::span<const int> true_labels,
                                    std::span<const double> eps_grid,
                                    std::span<const int> minpts_grid) {
  if (matrix.rows() != true_labels.size()) {
    throw DataError("dbscan_grid_search: reference labels required for every row");
  }
  std::vector<double> eps_values(eps_grid.begin(), eps_grid.end());
  if (eps_values.empty()) {
    for (int i = 0; i < 20; ++i) eps_values.push_back(0.1 + i * (2.0 - 0.1) / 19.0);
  }
  std::vector<int> minpts_values(minpts_grid.begin(), minpts_grid.end());
  if (minpts_values.empty()) {
    for (int p = 1; p <= 20; ++p) minpts_values.push_back(p);
  }

  DbscanGridResult result;
  result.cells.resize(eps_values.size() * minpts_values.size());
  parallel_for(result.cells.size(), [&](std::size_t cell) {
    const DbscanParams params{eps_values[cell / minpts_values.size()],
                              minpts_values[cell % minpts_values.size()]};
    const std::vector<int> labels = dbscan(matrix, params);
    DbscanGridCell& out = result.cells[cell];
    out.params = params;
    out.ari = ari(labels, true_labels);
    out.n_clusters = *std::max_element(labels.begin(), labels.end()) + 1;
    out.n_noise = static_cast<int>(std::count(labels.begin(), labels.end(), -1));
  });

  result.best_ari = -std::numeric_limits<double>::infinity();
  for (const DbscanGridCell& cell : result.cells) {
    if (cell.ari > result.best_ari) {
      result.best_ari = cell.ari;
      result.best_params = cell.params;
    }
  }
  return result;
}

}  // namespace bclust
