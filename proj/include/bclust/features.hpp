#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "bclust/dataset.hpp"

namespace bclust {

// Trajectory-level action aggregation plus the distributional analytics used
// to justify it: percentile distance ratios between action sets and the
// convergence of trajectory action means with trajectory length.

enum class TaatKind { kArithmetic, kGeometric };

/// One aggregated action vector per trajectory, order preserved.
struct TaatMatrix {
  Matrix rows;  // n_trajectories x action_dim
  std::vector<std::string> trajectory_ids;
  TaatKind kind = TaatKind::kArithmetic;
};

/// Curve of delta_same/delta_diff over a list of distance percentiles.
struct PercentileRatioCurve {
  std::vector<double> percentiles;  // in (0, 100]
  std::vector<double> ratios;
};

/// Mean distance between truncated-trajectory action means and the group
/// mean action, per truncation length.
struct WllnCurve {
  std::vector<int> lengths;
  std::vector<double> mean_distance;
  std::vector<double> reference_mean;  // group mean action
};

struct TrendMetrics {
  double silhouette = 0.0;
  double calinski_harabasz = 0.0;
  double davies_bouldin = 0.0;
};

/// Component-wise arithmetic mean of the trajectory's actions.
std::vector<double> taat(const Trajectory& trajectory);

/// Per component: exp(mean(log(a + shift))) - shift. Every shifted component
/// must be strictly positive.
std::vector<double> taat_geometric(const Trajectory& trajectory, double shift);

TaatMatrix taat_matrix(const Dataset& dataset, TaatKind kind = TaatKind::kArithmetic,
                       double shift = 0.0);

/// For each percentile p: ratio of (mean of the lowest p% within-set-a
/// pairwise distances) to (mean of the lowest p% cross-set distances). The
/// retained count is max(1, floor(p% of the pair count)). Throws
/// DegenerateInputError when the cross-set term is zero.
PercentileRatioCurve percentile_ratio(const Matrix& actions_a, const Matrix& actions_b,
                                      std::span<const double> percentiles);

/// Per ground-truth label group (keyed by label): mean distance between each
/// trajectory's first-L action mean and the group's pooled mean action, for
/// each requested length L. Every L must be <= the group's shortest
/// trajectory.
std::map<int, WllnCurve> wlln_curve(const Dataset& dataset, std::span<const int> lengths);

/// Silhouette / Calinski-Harabasz / Davies-Bouldin of the aggregated rows
/// under the given labels.
TrendMetrics clustering_trend_metrics(const TaatMatrix& taat, std::span<const int> labels);

}  // namespace bclust
