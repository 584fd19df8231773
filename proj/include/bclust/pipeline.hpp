#pragma once

#include <string>
#include <vector>

#include "bclust/pufilter.hpp"

namespace bclust {

// Iterative cluster extraction: find a dense seed in aggregated-action
// space, grow it with the positive-unlabelled filter, emit the converged
// members as one cluster, remove them, repeat on the remainder.

/// Filter settings tuned for whole-dataset runs: a smaller network, fewer
/// epochs, a higher learning rate, and a positive-pair cap. Keeps multi-pass
/// extraction tractable on modest hardware without changing the outcome on
/// well-separated data.
PuConfig default_pipeline_pu();

struct PipelineConfig {
  SeedConfig seed;
  PuConfig pu = default_pipeline_pu();
  /// A low-score mode smaller than this fraction of the remaining set marks
  /// the final cluster. Must lie in [0.001, 0.02].
  double last_cluster_fraction = 0.01;
  int max_clusters = 32;
};

struct ClusterIterationInfo {
  int cluster_id = 0;
  std::size_t remaining = 0;  // working-set size when the iteration began
  std::size_t seed_size = 0;
  int rounds = 0;
  std::size_t member_count = 0;
  int low_mode_count = 0;
  bool threshold_none = false;
  bool seed_retained = false;
  bool last = false;
};

struct ClusterAssignment {
  std::vector<std::string> trajectory_ids;  // dataset order
  std::vector<int> cluster_ids;             // contiguous from 0, same order
  std::vector<ClusterIterationInfo> iterations;
  bool max_clusters_reached = false;

  int n_clusters() const;
};

/// Runs the full extraction loop. Requires at least 2*g trajectories.
/// Residual trajectories (final low mode, undersized remainder, or
/// max_clusters exhaustion) join the last emitted cluster.
ClusterAssignment cluster(const Dataset& dataset, const PipelineConfig& config);

/// True when the filter found no second score mode, or the low mode holds
/// fewer than last_cluster_fraction of the remaining trajectories.
bool is_last_cluster(const ThresholdResult& threshold_result, std::size_t total_remaining,
                     const PipelineConfig& config);

}  // namespace bclust
