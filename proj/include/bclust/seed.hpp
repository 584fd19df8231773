#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bclust/features.hpp"

namespace bclust {

// Densest-subset seed extraction: Monte-Carlo search for a small trajectory
// subset with minimal mean pairwise distance in aggregated-action space,
// followed by one nearest-neighbor expansion around its centroid.

struct SeedConfig {
  std::uint64_t z = 1'000'000;  // Monte-Carlo subset draws
  int g = 6;                    // subset size
  double g2_fraction = 0.04;    // expansion size as a fraction of row count
  std::uint64_t rng_seed = 0;
};

struct SeedSet {
  std::vector<std::size_t> indices;  // distinct row indices, ascending
  std::vector<double> centroid;      // mean of member rows
  double mean_pairwise_distance = 0.0;
};

/// Among z uniformly drawn size-g subsets, returns the one with the smallest
/// mean pairwise Euclidean distance. Deterministic given config.rng_seed and
/// independent of thread count; ties broken by earliest draw.
SeedSet mcs_seed(const TaatMatrix& taat, const SeedConfig& config);

/// One expansion step: the round(g2_fraction * n) rows nearest to the seed's
/// centroid (ties by lower index), with centroid and mean pairwise distance
/// recomputed. The expansion never returns fewer than config.g rows.
SeedSet expand_seed(const TaatMatrix& taat, const SeedSet& seed, const SeedConfig& config);

struct PurityRow {
  int g = 0;
  int repeats = 0;
  double success_rate = 0.0;  // fraction of runs whose members share one label
};

/// Repeated seed searches on a labeled dataset: for each g, runs mcs_seed
/// `repeats` times with distinct derived seeds and reports how often all g
/// members share a single ground-truth label.
std::vector<PurityRow> seed_purity_experiment(const Dataset& dataset,
                                              std::span<const int> g_values, int repeats,
                                              std::uint64_t z, std::uint64_t rng_seed = 0);

}  // namespace bclust
