#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bclust/dataset.hpp"
#include "bclust/mlp.hpp"
#include "bclust/seed.hpp"

namespace bclust {

// Positive-unlabelled trajectory filter: state-action pairs from a seed
// subset are positives, synthetic mixed/uniform pairs are negatives, and a
// bagged MLP ensemble scores every trajectory. A KDE over the per-trajectory
// scores yields an adaptive membership threshold, iterated to a fixpoint.

/// State-action training pools (rows are concatenated state|action pairs).
struct SamplePools {
  Matrix positives;
  Matrix negatives;
};

struct TrainConfig {
  std::vector<int> hidden_sizes{256, 256};
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 256;
  std::uint64_t rng_seed = 0;
};

/// Input scaling plus the trained network; output is P(seed behavior).
struct Classifier {
  Scaler scaler;
  Mlp net;

  double predict(std::span<const double> state_action) const;
  /// Scores every row of raw (unscaled) pairs.
  void predict_batch(const Matrix& pairs, std::span<double> out) const;
};

struct PuEnsemble {
  std::vector<Classifier> members;
  std::vector<double> member_weights;  // non-negative, sum 1
};

/// Which KDE local minimum becomes the threshold when several exist.
enum class KdeMinRule { kLargestX, kLargestDensity };

struct ThresholdResult {
  std::vector<double> trajectory_probs;
  std::vector<double> kde_x;
  std::vector<double> kde_density;
  std::optional<double> threshold;
  int low_mode_count = 0;  // probs strictly below the threshold
};

struct PuConfig {
  int n_members = 5;
  TrainConfig hyper;
  int max_rounds = 10;
  double negatives_per_positive = 1.0;
  int kde_grid_size = 512;
  KdeMinRule kde_min_rule = KdeMinRule::kLargestX;
  /// Cap on positive pairs per round (seeded subsample above it; 0 = no cap).
  std::size_t max_positive_pairs = 0;
  std::uint64_t rng_seed = 0;
};

struct PuRoundInfo {
  int round = 0;
  int member_count = 0;
  std::optional<double> threshold;
  int low_mode_count = 0;
  std::vector<int> histogram;  // trajectory probs in 50 bins over [0,1]
};

struct PuResult {
  std::vector<std::size_t> member_indices;  // ascending trajectory indices
  ThresholdResult last_threshold;
  int rounds = 0;
  bool seed_retained = false;  // fixpoint would have shrunk below the seed
  std::vector<PuRoundInfo> round_info;
};

/// Synthesizes n negative pairs with three equally sized strategies: seed and
/// unlabeled pairs with state/action swapped across sources; a uniform draw
/// from bounds paired with a real state or action; and fully uniform draws.
/// Pairs colliding exactly with a seed pair are resampled.
Matrix generate_negatives(const Matrix& seed_pairs, const Matrix& unlabeled_pairs,
                          const SpaceBounds& bounds, std::size_t n, std::uint64_t rng_seed);

/// Mini-batch gradient descent on binary cross-entropy over the pools
/// (positives target 1, negatives target 0). Deterministic given the config
/// seed; the returned classifier never has a higher full-pool loss than its
/// initialization.
Classifier train_classifier(const SamplePools& pools, const TrainConfig& hyper);

/// Bags n_members classifiers, each on an independent bootstrap resample of
/// both pools, combined by uniform-weight probability averaging.
PuEnsemble train_ensemble(const SamplePools& pools, int n_members, const TrainConfig& hyper);

/// Mean over the trajectory's transitions of the ensemble's weighted output.
double trajectory_prob(const PuEnsemble& ensemble, const Trajectory& trajectory);

/// Gaussian KDE over [0,1] with Silverman bandwidth (clamped to >= 1e-3);
/// the threshold is an interior local minimum of the density per the rule,
/// or absent when the density has none.
ThresholdResult kde_threshold(std::span<const double> probs, int grid_size = 512,
                              KdeMinRule rule = KdeMinRule::kLargestX);

/// Semi-supervised loop: train on current members, rescore, rethreshold,
/// until membership reaches a fixpoint or max_rounds. A missing threshold
/// means a single behavior: every trajectory becomes a member. Membership
/// shrinking below the initial seed size retains the seed and stops.
PuResult pu_iterate(const Dataset& dataset, const SeedSet& initial_seed, const PuConfig& config);

}  // namespace bclust
