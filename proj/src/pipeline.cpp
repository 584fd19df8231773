#include "bclust/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "bclust/rng.hpp"

namespace bclust {

namespace {

enum : std::uint64_t {
  kStreamSeedSearch = 41,
  kStreamFilter = 42,
};

Dataset subset_of(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  Dataset sub;
  sub.state_dim = dataset.state_dim;
  sub.action_dim = dataset.action_dim;
  sub.trajectories.reserve(indices.size());
  for (std::size_t idx : indices) sub.trajectories.push_back(dataset.trajectories[idx]);
  return sub;
}

}  // namespace

PuConfig default_pipeline_pu() {
  PuConfig pu;
  pu.hyper.hidden_sizes = {32, 32};
  pu.hyper.learning_rate = 0.05;
  pu.hyper.epochs = 30;
  pu.hyper.batch_size = 128;
  // Extra synthetic negatives force the members to score the action given
  // the state instead of settling for the easier on-distribution test that
  // cannot tell two overlapping behaviors apart.
  pu.negatives_per_positive = 3.0;
  pu.max_positive_pairs = 8000;
  return pu;
}

int ClusterAssignment::n_clusters() const {
  int top = -1;
  for (int id : cluster_ids) top = std::max(top, id);
  return top + 1;
}

bool is_last_cluster(const ThresholdResult& threshold_result, std::size_t total_remaining,
                     const PipelineConfig& config) {
  if (!threshold_result.threshold) return true;
  return threshold_result.low_mode_count <
         config.last_cluster_fraction * static_cast<double>(total_remaining);
}

ClusterAssignment cluster(const Dataset& dataset, const PipelineConfig& config) {
  const auto g = static_cast<std::size_t>(config.seed.g);
  if (dataset.size() < 2 * g) {
    throw DataError("cluster: need at least " + std::to_string(2 * g) + " trajectories");
  }
  if (config.last_cluster_fraction < 0.001 || config.last_cluster_fraction > 0.02) {
    throw DataError("cluster: last_cluster_fraction must lie in [0.001, 0.02]");
  }
  if (config.max_clusters < 1) throw DataError("cluster: max_clusters must be positive");

  ClusterAssignment out;
  out.trajectory_ids.reserve(dataset.size());
  for (const Trajectory& t : dataset.trajectories) out.trajectory_ids.push_back(t.id);
  out.cluster_ids.assign(dataset.size(), -1);

  std::vector<std::size_t> working(dataset.size());
  std::iota(working.begin(), working.end(), std::size_t{0});

  // The score-density estimate is undefined below 10 trajectories, so a
  // remainder smaller than that cannot support another filter pass and is
  // treated like any undersized residual.
  const std::size_t min_working = std::max<std::size_t>(g, 10);

  int next_id = 0;
  while (!working.empty()) {
    if (working.size() < min_working || next_id == config.max_clusters) {
      // Undersized remainder, or the cluster budget ran out: fold what is
      // left into the most recent cluster.
      out.max_clusters_reached = next_id == config.max_clusters;
      const int fallback = std::max(0, next_id - 1);
      for (std::size_t idx : working) out.cluster_ids[idx] = fallback;
      break;
    }

    const Dataset sub = subset_of(dataset, working);
    const TaatMatrix features = taat_matrix(sub);

    SeedConfig seed_cfg = config.seed;
    seed_cfg.rng_seed = derive_seed(config.seed.rng_seed, kStreamSeedSearch,
                                    static_cast<std::uint64_t>(next_id));
    const SeedSet expanded = expand_seed(features, mcs_seed(features, seed_cfg), seed_cfg);

    ClusterIterationInfo info;
    info.cluster_id = next_id;
    info.remaining = working.size();
    info.seed_size = expanded.indices.size();

    std::vector<std::size_t> member_rows;  // rows of `sub`
    bool last = false;
    if (expanded.indices.size() >= working.size()) {
      // The expansion already covers everything that is left.
      member_rows.resize(working.size());
      std::iota(member_rows.begin(), member_rows.end(), std::size_t{0});
      info.threshold_none = true;
      last = true;
    } else {
      PuConfig pu_cfg = config.pu;
      pu_cfg.rng_seed =
          derive_seed(config.pu.rng_seed, kStreamFilter, static_cast<std::uint64_t>(next_id));
      PuResult filtered = pu_iterate(sub, expanded, pu_cfg);

      info.rounds = filtered.rounds;
      info.low_mode_count = filtered.last_threshold.low_mode_count;
      info.threshold_none = !filtered.last_threshold.threshold.has_value();
      info.seed_retained = filtered.seed_retained;
      last = is_last_cluster(filtered.last_threshold, working.size(), config);
      member_rows = std::move(filtered.member_indices);
    }

    if (last) {
      // Final cluster: residual low-mode trajectories join it too.
      member_rows.resize(working.size());
      std::iota(member_rows.begin(), member_rows.end(), std::size_t{0});
    }
    info.member_count = member_rows.size();
    info.last = last;
    out.iterations.push_back(info);

    std::vector<char> taken(working.size(), 0);
    for (std::size_t row : member_rows) {
      out.cluster_ids[working[row]] = next_id;
      taken[row] = 1;
    }
    std::vector<std::size_t> rest;
    rest.reserve(working.size() - member_rows.size());
    for (std::size_t row = 0; row < working.size(); ++row) {
      if (!taken[row]) rest.push_back(working[row]);
    }
    working = std::move(rest);
    ++next_id;
    if (last) break;
  }
  return out;
}

}  // namespace bclust
