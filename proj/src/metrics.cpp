#include "bclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace bclust {

namespace {

// Maps arbitrary label values onto 0..k-1 (sorted by value) and returns the
// compacted per-row ids.
std::vector<int> compact_labels(std::span<const int> labels, std::size_t* k_out) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [value, id] : ids) id = next++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  if (k_out) *k_out = ids.size();
  return out;
}

double comb2(double m) { return m * (m - 1.0) / 2.0; }

// True when both labelings induce the same equivalence relation.
bool same_partition(std::span<const int> a, std::span<const int> b) {
  std::map<int, int> fwd, rev;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it1, fresh1] = fwd.emplace(a[i], b[i]);
    if (!fresh1 && it1->second != b[i]) return false;
    auto [it2, fresh2] = rev.emplace(b[i], a[i]);
    if (!fresh2 && it2->second != a[i]) return false;
  }
  return true;
}

struct ClusterIndex {
  std::size_t k = 0;
  std::vector<int> ids;                        // compacted per-row label
  std::vector<std::vector<std::size_t>> rows;  // members per cluster
};

ClusterIndex index_clusters(const Matrix& matrix, std::span<const int> labels) {
  if (matrix.rows() != labels.size()) {
    throw DataError("metrics: label count does not match row count");
  }
  if (matrix.rows() == 0) throw DataError("metrics: empty input");
  ClusterIndex idx;
  idx.ids = compact_labels(labels, &idx.k);
  idx.rows.resize(idx.k);
  for (std::size_t i = 0; i < idx.ids.size(); ++i) {
    idx.rows[idx.ids[i]].push_back(i);
  }
  return idx;
}

Matrix centroids_of(const Matrix& matrix, const ClusterIndex& idx) {
  Matrix c(idx.k, matrix.cols(), 0.0);
  for (std::size_t g = 0; g < idx.k; ++g) {
    for (std::size_t r : idx.rows[g]) {
      for (std::size_t j = 0; j < matrix.cols(); ++j) c(g, j) += matrix(r, j);
    }
    for (std::size_t j = 0; j < matrix.cols(); ++j) c(g, j) /= idx.rows[g].size();
  }
  return c;
}

}  // namespace

double ari(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw DataError("ari: labelings have different lengths");
  }
  const std::size_t n = labels_a.size();
  if (n == 0) throw DataError("ari: empty labelings");
  if (n == 1) return 1.0;  // one element: both sides are the same partition

  std::size_t ka = 0, kb = 0;
  const std::vector<int> a = compact_labels(labels_a, &ka);
  const std::vector<int> b = compact_labels(labels_b, &kb);

  std::vector<double> row_sum(ka, 0.0), col_sum(kb, 0.0);
  std::map<std::pair<int, int>, double> cells;
  for (std::size_t i = 0; i < n; ++i) {
    cells[{a[i], b[i]}] += 1.0;
    row_sum[a[i]] += 1.0;
    col_sum[b[i]] += 1.0;
  }

  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [cell, count] : cells) sum_cells += comb2(count);
  for (double r : row_sum) sum_rows += comb2(r);
  for (double c : col_sum) sum_cols += comb2(c);

  // Cleared-denominator form: every term is an exact small integer, so
  // rational results like -1/2 come out exact instead of rounding through
  // an intermediate expected-index division.
  const double pairs = comb2(static_cast<double>(n));
  const double numerator = sum_cells * pairs - sum_rows * sum_cols;
  const double denominator = 0.5 * (sum_rows + sum_cols) * pairs - sum_rows * sum_cols;
  if (denominator == 0.0) {
    // Both labelings trivial (all-one-cluster or all-singletons): the
    // chance-corrected formula is 0/0.
    return same_partition(labels_a, labels_b) ? 1.0 : 0.0;
  }
  return numerator / denominator;
}

double silhouette(const Matrix& matrix, std::span<const int> labels) {
  const ClusterIndex idx = index_clusters(matrix, labels);
  if (idx.k < 2) throw DataError("silhouette: need at least 2 clusters");

  const std::size_t n = matrix.rows();
  double total = 0.0;
  std::vector<double> mean_dist(idx.k);
  for (std::size_t i = 0; i < n; ++i) {
    const int own = idx.ids[i];
    if (idx.rows[own].size() == 1) continue;  // singleton scores 0

    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist[idx.ids[j]] += euclidean_distance(matrix.row(i), matrix.row(j));
    }
    double a = mean_dist[own] / (idx.rows[own].size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < idx.k; ++g) {
      if (g == static_cast<std::size_t>(own)) continue;
      b = std::min(b, mean_dist[g] / idx.rows[g].size());
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / n;
}

double calinski_harabasz(const Matrix& matrix, std::span<const int> labels) {
  const ClusterIndex idx = index_clusters(matrix, labels);
  const std::size_t n = matrix.rows();
  if (idx.k < 2 || idx.k >= n) {
    throw DataError("calinski_harabasz: need 2 <= clusters < points");
  }
  const Matrix c = centroids_of(matrix, idx);
  std::vector<double> grand(matrix.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) grand[j] += matrix(i, j);
  }
  for (double& g : grand) g /= n;

  double between = 0.0, within = 0.0;
  for (std::size_t g = 0; g < idx.k; ++g) {
    between += idx.rows[g].size() * squared_distance(c.row(g), grand);
    for (std::size_t r : idx.rows[g]) {
      within += squared_distance(matrix.row(r), c.row(g));
    }
  }
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / (idx.k - 1)) / (within / (n - idx.k));
}

double davies_bouldin(const Matrix& matrix, std::span<const int> labels) {
  const ClusterIndex idx = index_clusters(matrix, labels);
  if (idx.k < 2) throw DataError("davies_bouldin: need at least 2 clusters");
  const Matrix c = centroids_of(matrix, idx);

  std::vector<double> scatter(idx.k, 0.0);
  for (std::size_t g = 0; g < idx.k; ++g) {
    for (std::size_t r : idx.rows[g]) {
      scatter[g] += euclidean_distance(matrix.row(r), c.row(g));
    }
    scatter[g] /= idx.rows[g].size();
  }

  double total = 0.0;
  for (std::size_t i = 0; i < idx.k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < idx.k; ++j) {
      if (j == i) continue;
      const double d = euclidean_distance(c.row(i), c.row(j));
      if (d == 0.0) {
        throw DegenerateInputError("davies_bouldin: coincident cluster centroids");
      }
      worst = std::max(worst, (scatter[i] + scatter[j]) / d);
    }
    total += worst;
  }
  return total / idx.k;
}

}  // namespace bclust
