#pragma once

#include <span>
#include <vector>

#include "bclust/common.hpp"

namespace bclust {

// Clustering evaluation indices. All functions treat label values as opaque
// ids (any ints, including -1 for noise points); only the induced partition
// matters. Rows of the matrix are observations.

/// Adjusted Rand Index in [-1, 1]; 1 means identical partitions. When the
/// chance-correction denominator is zero (both partitions trivial) the value
/// is defined as 1.0 for equal partitions and 0.0 otherwise.
double ari(std::span<const int> labels_a, std::span<const int> labels_b);

/// Mean silhouette width in [-1, 1]; singleton-cluster points score 0.
/// Requires >= 2 clusters.
double silhouette(const Matrix& matrix, std::span<const int> labels);

/// Variance-ratio index (B/(k-1))/(W/(n-k)). Requires 2 <= k < n. Returns
/// +infinity when the within-cluster scatter is exactly zero.
double calinski_harabasz(const Matrix& matrix, std::span<const int> labels);

/// Mean worst-pair similarity (1/k) sum_i max_j (s_i+s_j)/d(c_i,c_j).
/// Requires k >= 2; throws DegenerateInputError on coincident centroids.
double davies_bouldin(const Matrix& matrix, std::span<const int> labels);

}  // namespace bclust
