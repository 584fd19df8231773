#include "bclust/pufilter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "bclust/parallel.hpp"
#include "bclust/rng.hpp"

namespace bclust {

namespace {

// rng stream ids so every randomized stage draws independently
enum : std::uint64_t {
  kStreamInit = 11,
  kStreamShuffle = 12,
  kStreamBootstrap = 21,
  kStreamMemberTrain = 22,
  kStreamPositiveCap = 31,
  kStreamNegatives = 32,
  kStreamRoundTrain = 33,
};

bool row_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool row_equal(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

// Sorted view over the seed rows for exact-collision lookups.
class RowSet {
 public:
  explicit RowSet(const Matrix& rows) : rows_(rows), order_(rows.rows()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return row_less(rows_.row(a), rows_.row(b));
    });
  }

  bool contains(std::span<const double> row) const {
    const auto it = std::lower_bound(order_.begin(), order_.end(), row,
                                     [&](std::size_t idx, std::span<const double> key) {
                                       return row_less(rows_.row(idx), key);
                                     });
    return it != order_.end() && row_equal(rows_.row(*it), row);
  }

 private:
  const Matrix& rows_;
  std::vector<std::size_t> order_;
};

}  // namespace

Matrix generate_negatives(const Matrix& seed_pairs, const Matrix& unlabeled_pairs,
                          const SpaceBounds& bounds, std::size_t n, std::uint64_t rng_seed) {
  const std::size_t state_dim = bounds.state_lo.size();
  const std::size_t action_dim = bounds.action_lo.size();
  const std::size_t width = state_dim + action_dim;
  if (seed_pairs.rows() == 0 || unlabeled_pairs.rows() == 0) {
    throw DataError("generate_negatives: both sample pools must be non-empty");
  }
  if (seed_pairs.cols() != width || unlabeled_pairs.cols() != width) {
    throw DataError("generate_negatives: pair width does not match bounds dims");
  }
  if (n < 3) throw DataError("generate_negatives: need at least 3 pairs (one per strategy)");

  const RowSet seed_rows(seed_pairs);
  Rng rng(rng_seed);

  const auto copy_state = [&](std::span<const double> src, std::span<double> dst) {
    std::copy(src.begin(), src.begin() + state_dim, dst.begin());
  };
  const auto copy_action = [&](std::span<const double> src, std::span<double> dst) {
    std::copy(src.begin() + state_dim, src.end(), dst.begin() + state_dim);
  };
  const auto uniform_state = [&](std::span<double> dst) {
    for (std::size_t j = 0; j < state_dim; ++j) {
      dst[j] = rng.uniform(bounds.state_lo[j], bounds.state_hi[j]);
    }
  };
  const auto uniform_action = [&](std::span<double> dst) {
    for (std::size_t j = 0; j < action_dim; ++j) {
      dst[state_dim + j] = rng.uniform(bounds.action_lo[j], bounds.action_hi[j]);
    }
  };
  const auto seed_row = [&] { return seed_pairs.row(rng.uniform_index(seed_pairs.rows())); };
  const auto unlabeled_row = [&] {
    return unlabeled_pairs.row(rng.uniform_index(unlabeled_pairs.rows()));
  };

  // n split as evenly as possible: strategy 1 = cross-source swaps,
  // 2 = one uniform half, 3 = fully uniform.
  const std::size_t base = n / 3, rem = n % 3;
  const std::size_t counts[3] = {base + (rem > 0), base + (rem > 1), base};

  Matrix out(n, width);
  std::size_t row = 0;
  for (int strategy = 0; strategy < 3; ++strategy) {
    for (std::size_t k = 0; k < counts[strategy]; ++k, ++row) {
      auto dst = out.row(row);
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        switch (strategy) {
          case 0:
            if (k % 2 == 0) {
              copy_state(seed_row(), dst);
              copy_action(unlabeled_row(), dst);
            } else {
              copy_state(unlabeled_row(), dst);
              copy_action(seed_row(), dst);
            }
            break;
          case 1:
            switch (k % 4) {
              case 0:
                uniform_state(dst);
                copy_action(seed_row(), dst);
                break;
              case 1:
                uniform_state(dst);
                copy_action(unlabeled_row(), dst);
                break;
              case 2:
                copy_state(seed_row(), dst);
                uniform_action(dst);
                break;
              default:
                copy_state(unlabeled_row(), dst);
                uniform_action(dst);
                break;
            }
            break;
          default:
            uniform_state(dst);
            uniform_action(dst);
            break;
        }
        ok = !seed_rows.contains(dst);
      }
      if (!ok) {
        throw DegenerateInputError(
            "generate_negatives: cannot draw a pair distinct from the seed pairs "
            "(degenerate bounds or single-point pools)");
      }
    }
  }
  return out;
}

double Classifier::predict(std::span<const double> state_action) const {
  std::vector<double> x(state_action.begin(), state_action.end());
  scaler.apply(x);
  return net.predict(x);
}

void Classifier::predict_batch(const Matrix& pairs, std::span<double> out) const {
  net.predict_batch(scaler.transform(pairs), out);
}

namespace {

std::string describe_hyper(const TrainConfig& hyper) {
  std::ostringstream os;
  os << "hidden=[";
  for (std::size_t i = 0; i < hyper.hidden_sizes.size(); ++i) {
    os << (i ? "," : "") << hyper.hidden_sizes[i];
  }
  os << "] lr=" << hyper.learning_rate << " epochs=" << hyper.epochs
     << " batch=" << hyper.batch_size;
  return os.str();
}

}  // namespace

Classifier train_classifier(const SamplePools& pools, const TrainConfig& hyper) {
  const std::size_t n_pos = pools.positives.rows();
  const std::size_t n_neg = pools.negatives.rows();
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("train_classifier: both sample pools must be non-empty");
  }
  if (pools.positives.cols() != pools.negatives.cols()) {
    throw DataError("train_classifier: pool widths differ");
  }
  if (hyper.epochs < 0 || hyper.batch_size < 1 || hyper.learning_rate <= 0.0) {
    throw DataError("train_classifier: invalid hyperparameters (" + describe_hyper(hyper) + ")");
  }
  const std::size_t width = pools.positives.cols();
  const std::size_t n = n_pos + n_neg;

  Matrix raw(n, width);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n_pos; ++i) {
    std::copy_n(pools.positives.row(i).begin(), width, raw.row(i).begin());
    targets[i] = 1.0;
  }
  for (std::size_t i = 0; i < n_neg; ++i) {
    std::copy_n(pools.negatives.row(i).begin(), width, raw.row(n_pos + i).begin());
    targets[n_pos + i] = 0.0;
  }

  Classifier clf;
  clf.scaler = Scaler::fit(raw);
  const Matrix inputs = clf.scaler.transform(raw);

  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(width));
  sizes.insert(sizes.end(), hyper.hidden_sizes.begin(), hyper.hidden_sizes.end());
  sizes.push_back(1);
  clf.net = Mlp(sizes, derive_seed(hyper.rng_seed, kStreamInit));

  double best_loss = clf.net.loss(inputs, targets, nullptr);
  std::vector<double> best_params = clf.net.params();

  Rng shuffle_rng(derive_seed(hyper.rng_seed, kStreamShuffle));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto batch = static_cast<std::size_t>(hyper.batch_size);
  Matrix bx(std::min(batch, n), width);
  std::vector<double> by(std::min(batch, n));
  std::vector<double> grad;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t size = std::min(batch, n - start);
      if (bx.rows() != size) {
        bx = Matrix(size, width);
        by.resize(size);
      }
      for (std::size_t i = 0; i < size; ++i) {
        std::copy_n(inputs.row(order[start + i]).begin(), width, bx.row(i).begin());
        by[i] = targets[order[start + i]];
      }
      const double batch_loss = clf.net.loss(bx, by, &grad);
      if (!std::isfinite(batch_loss)) {
        throw DataError("train_classifier: training diverged (non-finite loss, " +
                        describe_hyper(hyper) + ")");
      }
      auto& params = clf.net.params();
      for (std::size_t p = 0; p < params.size(); ++p) {
        params[p] -= hyper.learning_rate * grad[p];
      }
    }
    // Keep the best full-pool model seen, so training can only improve on
    // the initialization even if late epochs overshoot.
    const double full = clf.net.loss(inputs, targets, nullptr);
    if (std::isfinite(full) && full < best_loss) {
      best_loss = full;
      best_params = clf.net.params();
    }
  }
  clf.net.params() = best_params;
  return clf;
}

PuEnsemble train_ensemble(const SamplePools& pools, int n_members, const TrainConfig& hyper) {
  if (n_members < 1) throw DataError("train_ensemble: need at least one member");
  PuEnsemble ensemble;
  ensemble.members.resize(n_members);
  ensemble.member_weights.assign(n_members, 1.0 / n_members);

  parallel_for(static_cast<std::size_t>(n_members), [&](std::size_t m) {
    Rng boot(derive_seed(hyper.rng_seed, kStreamBootstrap, m));
    const auto resample = [&](const Matrix& pool) {
      Matrix out(pool.rows(), pool.cols());
      for (std::size_t i = 0; i < pool.rows(); ++i) {
        const auto src = pool.row(boot.uniform_index(pool.rows()));
        std::copy(src.begin(), src.end(), out.row(i).begin());
      }
      return out;
    };
    SamplePools member_pools;
    member_pools.positives = resample(pools.positives);
    member_pools.negatives = resample(pools.negatives);
    TrainConfig member_hyper = hyper;
    member_hyper.rng_seed = derive_seed(hyper.rng_seed, kStreamMemberTrain, m);
    ensemble.members[m] = train_classifier(member_pools, member_hyper);
  });
  return ensemble;
}

namespace {

Matrix trajectory_pairs(const Trajectory& trajectory) {
  const std::size_t sd = trajectory.transitions.front().state.size();
  const std::size_t ad = trajectory.transitions.front().action.size();
  Matrix pairs(trajectory.transitions.size(), sd + ad);
  for (std::size_t t = 0; t < trajectory.transitions.size(); ++t) {
    auto row = pairs.row(t);
    std::copy(trajectory.transitions[t].state.begin(), trajectory.transitions[t].state.end(),
              row.begin());
    std::copy(trajectory.transitions[t].action.begin(), trajectory.transitions[t].action.end(),
              row.begin() + sd);
  }
  return pairs;
}

std::vector<double> ensemble_scores(const PuEnsemble& ensemble, const Matrix& pairs) {
  std::vector<double> sum(pairs.rows(), 0.0), one(pairs.rows());
  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    ensemble.members[m].predict_batch(pairs, one);
    const double w = ensemble.member_weights[m];
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += w * one[i];
  }
  return sum;
}

}  // namespace

double trajectory_prob(const PuEnsemble& ensemble, const Trajectory& trajectory) {
  if (trajectory.transitions.empty()) {
    throw DataError("trajectory_prob: trajectory '" + trajectory.id + "' is empty");
  }
  const std::vector<double> scores = ensemble_scores(ensemble, trajectory_pairs(trajectory));
  return std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
}

ThresholdResult kde_threshold(std::span<const double> probs, int grid_size, KdeMinRule rule) {
  if (probs.size() < 10) throw DataError("kde_threshold: need at least 10 probabilities");
  if (grid_size < 8) throw DataError("kde_threshold: grid too small");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DataError("kde_threshold: probabilities must lie in [0,1]");
    }
  }
  const auto m = static_cast<double>(probs.size());
  double mean = 0.0;
  for (double p : probs) mean += p;
  mean /= m;
  double var = 0.0;
  for (double p : probs) var += (p - mean) * (p - mean);
  var /= m;
  // Silverman's rule, clamped so duplicated samples cannot collapse the
  // kernel into grid-scale spikes.
  const double bandwidth = std::max(1.06 * std::sqrt(var) * std::pow(m, -0.2), 1e-3);

  ThresholdResult result;
  result.trajectory_probs.assign(probs.begin(), probs.end());
  result.kde_x.resize(grid_size);
  result.kde_density.resize(grid_size);
  const double norm = 1.0 / (m * bandwidth * std::sqrt(2.0 * std::acos(-1.0)));
  for (int k = 0; k < grid_size; ++k) {
    const double x = static_cast<double>(k) / (grid_size - 1);
    double density = 0.0;
    for (double p : probs) {
      const double u = (x - p) / bandwidth;
      density += std::exp(-0.5 * u * u);
    }
    result.kde_x[k] = x;
    result.kde_density[k] = density * norm;
  }

  int chosen = -1;
  for (int k = 1; k + 1 < grid_size; ++k) {
    const bool is_min = result.kde_density[k] < result.kde_density[k - 1] &&
                        result.kde_density[k] < result.kde_density[k + 1];
    if (!is_min) continue;
    if (chosen < 0) {
      chosen = k;
    } else if (rule == KdeMinRule::kLargestX) {
      chosen = k;  // later k = larger x
    } else if (result.kde_density[k] >= result.kde_density[chosen]) {
      chosen = k;  // deepest rule keeps the highest-density minimum
    }
  }
  if (chosen >= 0) {
    result.threshold = result.kde_x[chosen];
    result.low_mode_count = static_cast<int>(
        std::count_if(probs.begin(), probs.end(), [&](double p) { return p < *result.threshold; }));
  }
  return result;
}

PuResult pu_iterate(const Dataset& dataset, const SeedSet& initial_seed, const PuConfig& config) {
  const std::size_t n_traj = dataset.size();
  if (initial_seed.indices.empty()) throw DataError("pu_iterate: empty initial seed");
  if (initial_seed.indices.size() >= n_traj) {
    throw DataError("pu_iterate: initial seed must be a strict subset of the dataset");
  }
  for (std::size_t idx : initial_seed.indices) {
    if (idx >= n_traj) throw DataError("pu_iterate: seed index out of range");
  }
  if (config.max_rounds < 1) throw DataError("pu_iterate: max_rounds must be positive");

  // Flatten every transition once; per-trajectory slices are [offset, offset+len).
  const std::size_t width = static_cast<std::size_t>(dataset.state_dim) + dataset.action_dim;
  std::size_t total_transitions = 0;
  std::vector<std::size_t> offsets(n_traj + 1, 0);
  for (std::size_t i = 0; i < n_traj; ++i) {
    total_transitions += dataset.trajectories[i].length();
    offsets[i + 1] = total_transitions;
  }
  Matrix all_pairs(total_transitions, width);
  parallel_for(n_traj, [&](std::size_t i) {
    const Matrix rows = trajectory_pairs(dataset.trajectories[i]);
    std::copy(rows.data().begin(), rows.data().end(),
              all_pairs.data().begin() + offsets[i] * width);
  });
  const SpaceBounds bounds = space_bounds(dataset);

  const auto gather = [&](const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy_n(all_pairs.row(rows[i]).begin(), width, out.row(i).begin());
    }
    return out;
  };

  PuResult result;
  std::vector<std::size_t> members(initial_seed.indices);
  std::sort(members.begin(), members.end());

  for (int round = 0; round < config.max_rounds; ++round) {
    // Transition rows of current members (positives) and everything else.
    std::vector<char> is_member(n_traj, 0);
    for (std::size_t idx : members) is_member[idx] = 1;
    std::vector<std::size_t> pos_rows, unl_rows;
    for (std::size_t i = 0; i < n_traj; ++i) {
      for (std::size_t r = offsets[i]; r < offsets[i + 1]; ++r) {
        (is_member[i] ? pos_rows : unl_rows).push_back(r);
      }
    }
    if (unl_rows.empty()) {
      // Every trajectory is already a member; nothing left to separate.
      result.rounds = round;
      break;
    }
    if (config.max_positive_pairs > 0 && pos_rows.size() > config.max_positive_pairs) {
      Rng cap_rng(derive_seed(config.rng_seed, kStreamPositiveCap, round));
      cap_rng.shuffle(pos_rows);
      pos_rows.resize(config.max_positive_pairs);
      std::sort(pos_rows.begin(), pos_rows.end());
    }

    SamplePools pools;
    pools.positives = gather(pos_rows);
    const auto n_neg = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::llround(config.negatives_per_positive *
                                                 static_cast<double>(pos_rows.size()))));
    pools.negatives = generate_negatives(pools.positives, gather(unl_rows), bounds, n_neg,
                                         derive_seed(config.rng_seed, kStreamNegatives, round));

    TrainConfig hyper = config.hyper;
    hyper.rng_seed = derive_seed(config.rng_seed, kStreamRoundTrain, round);
    const PuEnsemble ensemble = train_ensemble(pools, config.n_members, hyper);

    const std::vector<double> pair_scores = ensemble_scores(ensemble, all_pairs);
    std::vector<double> probs(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
      double total = 0.0;
      for (std::size_t r = offsets[i]; r < offsets[i + 1]; ++r) total += pair_scores[r];
      probs[i] = total / (offsets[i + 1] - offsets[i]);
    }

    result.last_threshold = kde_threshold(probs, config.kde_grid_size, config.kde_min_rule);
    result.rounds = round + 1;

    PuRoundInfo info;
    info.round = round;
    info.threshold = result.last_threshold.threshold;
    info.low_mode_count = result.last_threshold.low_mode_count;
    info.histogram.assign(50, 0);
    for (double p : probs) {
      ++info.histogram[std::min<std::size_t>(49, static_cast<std::size_t>(p * 50.0))];
    }

    if (!result.last_threshold.threshold) {
      // Unimodal score distribution: the whole remainder is one behavior.
      members.resize(n_traj);
      std::iota(members.begin(), members.end(), std::size_t{0});
      info.member_count = static_cast<int>(members.size());
      result.round_info.push_back(std::move(info));
      break;
    }
    const double threshold = *result.last_threshold.threshold;
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < n_traj; ++i) {
      if (probs[i] > threshold) next.push_back(i);
    }
    info.member_count = static_cast<int>(next.size());
    result.round_info.push_back(std::move(info));

    if (next.size() < initial_seed.indices.size()) {
      // The filter collapsed; fall back to the trusted seed.
      members = initial_seed.indices;
      std::sort(members.begin(), members.end());
      result.seed_retained = true;
      break;
    }
    if (next == members) break;  // fixpoint
    members = std::move(next);
  }

  result.member_indices = std::move(members);
  return result;
}

}  // namespace bclust
