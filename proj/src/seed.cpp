#include "bclust/seed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "bclust/parallel.hpp"
#include "bclust/rng.hpp"

namespace bclust {

namespace {

double mean_pairwise(const Matrix& rows, std::span<const std::size_t> indices) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = i + 1; j < indices.size(); ++j) {
      total += euclidean_distance(rows.row(indices[i]), rows.row(indices[j]));
      ++pairs;
    }
  }
  return pairs ? total / pairs : 0.0;
}

std::vector<double> centroid_of(const Matrix& rows, std::span<const std::size_t> indices) {
  std::vector<double> c(rows.cols(), 0.0);
  for (std::size_t idx : indices) {
    const auto row = rows.row(idx);
    for (std::size_t j = 0; j < rows.cols(); ++j) c[j] += row[j];
  }
  for (double& x : c) x /= indices.size();
  return c;
}

SeedSet finish_seed(const Matrix& rows, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  SeedSet out;
  out.mean_pairwise_distance = mean_pairwise(rows, indices);
  out.centroid = centroid_of(rows, indices);
  out.indices = std::move(indices);
  return out;
}

}  // namespace

SeedSet mcs_seed(const TaatMatrix& taat, const SeedConfig& config) {
  const std::size_t n = taat.rows.rows();
  const auto g = static_cast<std::size_t>(config.g);
  if (config.g < 2) throw DataError("mcs_seed: subset size must be at least 2");
  if (config.z == 0) throw DataError("mcs_seed: need at least one draw");
  if (n < g) {
    throw DataError("mcs_seed: " + std::to_string(n) + " rows < subset size " +
                    std::to_string(config.g));
  }
  if (n == g) {  // the whole set is the only candidate
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return finish_seed(taat.rows, all);
  }

  struct Best {
    double dist = std::numeric_limits<double>::infinity();
    std::uint64_t draw = 0;
    std::vector<std::size_t> indices;
  };

  // Each draw derives its own generator from (seed, draw index), so chunked
  // workers reproduce the sequential search exactly; ties go to the earliest
  // draw by the (dist, draw) ordering in the merge.
  std::vector<Best> chunk_best;
  std::mutex merge_mutex;
  parallel_chunks(config.z, [&](std::size_t begin, std::size_t end) {
    Best local;
    std::vector<std::size_t> subset(g);
    for (std::uint64_t draw = begin; draw < end; ++draw) {
      SplitMix sm(derive_seed(config.rng_seed, draw));
      std::size_t filled = 0;
      while (filled < g) {
        const std::size_t candidate = sm.uniform_index(n);
        bool duplicate = false;
        for (std::size_t k = 0; k < filled; ++k) {
          if (subset[k] == candidate) {
            duplicate = true;
            break;
          }
        }
        if (!duplicate) subset[filled++] = candidate;
      }
      double total = 0.0;
      for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = i + 1; j < g; ++j) {
          total += euclidean_distance(taat.rows.row(subset[i]), taat.rows.row(subset[j]));
        }
      }
      const double dist = total / (g * (g - 1) / 2);
      if (dist < local.dist || (dist == local.dist && draw < local.draw)) {
        local.dist = dist;
        local.draw = draw;
        local.indices = subset;
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    chunk_best.push_back(std::move(local));
  });

  const Best* best = nullptr;
  for (const Best& b : chunk_best) {
    if (!best || b.dist < best->dist || (b.dist == best->dist && b.draw < best->draw)) {
      best = &b;
    }
  }
  return finish_seed(taat.rows, best->indices);
}

SeedSet expand_seed(const TaatMatrix& taat, const SeedSet& seed, const SeedConfig& config) {
  const std::size_t n = taat.rows.rows();
  if (seed.indices.empty()) throw DataError("expand_seed: empty seed");
  for (std::size_t idx : seed.indices) {
    if (idx >= n) throw DataError("expand_seed: seed index out of range");
  }
  auto g2 = static_cast<std::size_t>(std::llround(config.g2_fraction * n));
  g2 = std::min(n, std::max<std::size_t>(g2, static_cast<std::size_t>(config.g)));

  std::vector<std::pair<double, std::size_t>> by_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    by_dist[i] = {euclidean_distance(taat.rows.row(i), seed.centroid), i};
  }
  std::sort(by_dist.begin(), by_dist.end());  // ties broken by lower index

  std::vector<std::size_t> chosen(g2);
  for (std::size_t k = 0; k < g2; ++k) chosen[k] = by_dist[k].second;
  return finish_seed(taat.rows, std::move(chosen));
}

std::vector<PurityRow> seed_purity_experiment(const Dataset& dataset,
                                              std::span<const int> g_values, int repeats,
                                              std::uint64_t z, std::uint64_t rng_seed) {
  if (!dataset.has_labels()) {
    throw DataError("seed_purity_experiment: ground-truth labels required");
  }
  if (repeats <= 0) throw DataError("seed_purity_experiment: repeats must be positive");
  const TaatMatrix features = taat_matrix(dataset);
  const std::vector<int> labels = dataset.labels();

  std::vector<PurityRow> table;
  table.reserve(g_values.size());
  for (int g : g_values) {
    std::vector<char> success(repeats, 0);
    parallel_for(static_cast<std::size_t>(repeats), [&](std::size_t run) {
      SeedConfig cfg;
      cfg.z = z;
      cfg.g = g;
      cfg.rng_seed = derive_seed(rng_seed, static_cast<std::uint64_t>(g), run);
      const SeedSet seed = mcs_seed(features, cfg);
      const int first = labels[seed.indices.front()];
      success[run] = std::all_of(seed.indices.begin(), seed.indices.end(),
                                 [&](std::size_t idx) { return labels[idx] == first; });
    });
    PurityRow row;
    row.g = g;
    row.repeats = repeats;
    row.success_rate =
        static_cast<double>(std::count(success.begin(), success.end(), 1)) / repeats;
    table.push_back(row);
  }
  return table;
}

}  // namespace bclust
