#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bclust/common.hpp"

namespace bclust {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  bool terminal = false;
};

struct Trajectory {
  std::string id;
  std::vector<Transition> transitions;
  std::optional<int> label;  // ground-truth behavior id, evaluation only

  std::size_t length() const { return transitions.size(); }
};

/// An ordered collection of trajectories with declared state/action dims.
/// Immutable by convention once built; operations return fresh values.
struct Dataset {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<Trajectory> trajectories;

  std::size_t size() const { return trajectories.size(); }
  bool has_labels() const;
  /// Per-trajectory labels; throws DataError if any trajectory is unlabeled.
  std::vector<int> labels() const;
  /// Throws DataError if any type invariant is violated.
  void validate() const;
};

struct SpaceBounds {
  std::vector<double> state_lo, state_hi;
  std::vector<double> action_lo, action_hi;
};

/// trajset-v1: line 1 is the metadata record, each further line one trajectory.
Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

enum class FeatureMap { kTanh, kIdentity };

/// Linear-feedback policy used by the synthetic generator. Actions are
/// weights * features(state) + bias + Gaussian noise.
struct BehaviorPolicy {
  int policy_id = 0;
  Matrix weights;            // action_dim x state_dim
  std::vector<double> bias;  // action_dim
  double action_noise_std = 0.0;
  FeatureMap feature_map = FeatureMap::kTanh;

  std::vector<double> expected_action(std::span<const double> state) const;
};

struct SynthConfig {
  int n_policies = 6;
  int trajectories_per_policy = 500;
  int traj_len = 50;
  int state_dim = 8;
  int action_dim = 4;
  double separation = 2.0;       // scales the mutual distance between policy biases
  double action_noise_std = 0.1;
  std::uint64_t rng_seed = 0;
  FeatureMap feature_map = FeatureMap::kTanh;
  /// Scale of the state-feedback weights; 0 makes every action an i.i.d.
  /// Gaussian around the policy bias.
  double weight_scale = 6.5;
  /// All policies share one weight matrix (they then differ only by bias).
  bool shared_weights = false;
};

/// Generates a labeled multi-behavior dataset by rolling each policy through
/// shared linear-Gaussian dynamics. Deterministic given rng_seed.
Dataset synthesize(const SynthConfig& config);

/// The policies synthesize(config) rolls out, for closed-form checks.
std::vector<BehaviorPolicy> synthesize_policies(const SynthConfig& config);

struct PerturbSpec {
  enum class Mode { kImbalance, kNoise };
  Mode mode = Mode::kNoise;
  std::vector<int> imbalance_ratios;  // one positive entry per label group
  /// Share of trajectories that receive bounded uniform noise; the remainder
  /// get zero-mean Gaussian noise instead. Default: all uniform.
  double noise_fraction_uniform = 1.0;
  /// Per-trajectory noise magnitude as a fraction of each dimension's data
  /// extent: the full width of the uniform interval, or the Gaussian std.
  double noise_scale_lo = 0.05;
  double noise_scale_hi = 0.20;
};

/// Imbalance mode subsamples label groups to the requested ratios; noise mode
/// adds per-trajectory uniform or Gaussian noise to every state and action
/// component, scaled by each dimension's extent in the input dataset.
Dataset perturb(const Dataset& dataset, const PerturbSpec& spec, std::uint64_t rng_seed);

/// Per-dimension min/max over all transitions. Throws on an empty dataset.
SpaceBounds space_bounds(const Dataset& dataset);

}  // namespace bclust
