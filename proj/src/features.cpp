#include "bclust/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bclust/metrics.hpp"
#include "bclust/parallel.hpp"

namespace bclust {

std::vector<double> taat(const Trajectory& trajectory) {
  if (trajectory.transitions.empty()) {
    throw DataError("taat: trajectory '" + trajectory.id + "' is empty");
  }
  const std::size_t dim = trajectory.transitions.front().action.size();
  std::vector<double> mean(dim, 0.0);
  for (const Transition& tr : trajectory.transitions) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += tr.action[j];
  }
  for (double& m : mean) m /= trajectory.transitions.size();
  return mean;
}

std::vector<double> taat_geometric(const Trajectory& trajectory, double shift) {
  if (trajectory.transitions.empty()) {
    throw DataError("taat: trajectory '" + trajectory.id + "' is empty");
  }
  if (shift < 0.0) throw DataError("taat_geometric: shift must be non-negative");
  const std::size_t dim = trajectory.transitions.front().action.size();
  std::vector<double> log_mean(dim, 0.0);
  for (const Transition& tr : trajectory.transitions) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double shifted = tr.action[j] + shift;
      if (shifted <= 0.0) {
        throw DataError("taat_geometric: non-positive shifted component in trajectory '" +
                        trajectory.id + "'");
      }
      log_mean[j] += std::log(shifted);
    }
  }
  for (double& m : log_mean) {
    m = std::exp(m / trajectory.transitions.size()) - shift;
  }
  return log_mean;
}

TaatMatrix taat_matrix(const Dataset& dataset, TaatKind kind, double shift) {
  if (dataset.trajectories.empty()) throw DataError("taat_matrix: empty dataset");
  TaatMatrix out;
  out.kind = kind;
  out.rows = Matrix(dataset.size(), dataset.action_dim);
  out.trajectory_ids.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.trajectory_ids[i] = dataset.trajectories[i].id;
  }
  parallel_for(dataset.size(), [&](std::size_t i) {
    const std::vector<double> row = kind == TaatKind::kArithmetic
                                        ? taat(dataset.trajectories[i])
                                        : taat_geometric(dataset.trajectories[i], shift);
    std::copy(row.begin(), row.end(), out.rows.row(i).begin());
  });
  return out;
}

namespace {

// Mean of the lowest `keep` values of v (v is reordered in place).
double mean_lowest(std::vector<double>& v, std::size_t keep) {
  std::nth_element(v.begin(), v.begin() + (keep - 1), v.end());
  const double sum = std::accumulate(v.begin(), v.begin() + keep, 0.0);
  return sum / keep;
}

std::vector<double> pairwise_within(const Matrix& m) {
  const std::size_t n = m.rows();
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d.push_back(euclidean_distance(m.row(i), m.row(j)));
    }
  }
  return d;
}

std::vector<double> pairwise_cross(const Matrix& a, const Matrix& b) {
  std::vector<double> d;
  d.reserve(a.rows() * b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      d.push_back(euclidean_distance(a.row(i), b.row(j)));
    }
  }
  return d;
}

}  // namespace

PercentileRatioCurve percentile_ratio(const Matrix& actions_a, const Matrix& actions_b,
                                      std::span<const double> percentiles) {
  if (actions_a.rows() < 2 || actions_b.rows() < 2) {
    throw DataError("percentile_ratio: each set needs at least 2 vectors");
  }
  for (double p : percentiles) {
    if (p <= 0.0 || p > 100.0) {
      throw DataError("percentile_ratio: percentiles must lie in (0, 100]");
    }
  }
  std::vector<double> same = pairwise_within(actions_a);
  std::vector<double> cross = pairwise_cross(actions_a, actions_b);

  PercentileRatioCurve curve;
  curve.percentiles.assign(percentiles.begin(), percentiles.end());
  curve.ratios.reserve(percentiles.size());
  for (double p : percentiles) {
    const auto keep_same =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(p / 100.0 * same.size())));
    const auto keep_cross =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(p / 100.0 * cross.size())));
    const double delta_same = mean_lowest(same, keep_same);
    const double delta_diff = mean_lowest(cross, keep_cross);
    if (delta_diff == 0.0) {
      throw DegenerateInputError("percentile_ratio: zero cross-set distance");
    }
    curve.ratios.push_back(delta_same / delta_diff);
  }
  return curve;
}

std::map<int, WllnCurve> wlln_curve(const Dataset& dataset, std::span<const int> lengths) {
  if (!dataset.has_labels()) throw DataError("wlln_curve: ground-truth labels required");
  if (lengths.empty()) throw DataError("wlln_curve: no lengths given");

  std::map<int, std::vector<const Trajectory*>> groups;
  for (const Trajectory& t : dataset.trajectories) groups[*t.label].push_back(&t);

  std::map<int, WllnCurve> out;
  for (const auto& [label, members] : groups) {
    std::size_t min_len = members.front()->length();
    for (const Trajectory* t : members) min_len = std::min(min_len, t->length());
    for (int len : lengths) {
      if (len <= 0 || static_cast<std::size_t>(len) > min_len) {
        throw DataError("wlln_curve: length " + std::to_string(len) +
                        " exceeds the shortest trajectory of group " + std::to_string(label));
      }
    }

    WllnCurve curve;
    curve.lengths.assign(lengths.begin(), lengths.end());
    curve.reference_mean.assign(dataset.action_dim, 0.0);
    std::size_t n_actions = 0;
    for (const Trajectory* t : members) {
      for (const Transition& tr : t->transitions) {
        for (int j = 0; j < dataset.action_dim; ++j) curve.reference_mean[j] += tr.action[j];
        ++n_actions;
      }
    }
    for (double& m : curve.reference_mean) m /= n_actions;

    curve.mean_distance.reserve(lengths.size());
    std::vector<double> prefix_mean(dataset.action_dim);
    for (int len : lengths) {
      double total = 0.0;
      for (const Trajectory* t : members) {
        std::fill(prefix_mean.begin(), prefix_mean.end(), 0.0);
        for (int s = 0; s < len; ++s) {
          const auto& a = t->transitions[s].action;
          for (int j = 0; j < dataset.action_dim; ++j) prefix_mean[j] += a[j];
        }
        for (double& m : prefix_mean) m /= len;
        total += euclidean_distance(prefix_mean, curve.reference_mean);
      }
      curve.mean_distance.push_back(total / members.size());
    }
    out.emplace(label, std::move(curve));
  }
  return out;
}

TrendMetrics clustering_trend_metrics(const TaatMatrix& taat, std::span<const int> labels) {
  TrendMetrics m;
  m.silhouette = silhouette(taat.rows, labels);
  m.calinski_harabasz = calinski_harabasz(taat.rows, labels);
  m.davies_bouldin = davies_bouldin(taat.rows, labels);
  return m;
}

}  // namespace bclust
