#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bclust/parallel.hpp"
#include "bclust/rng.hpp"
#include "bclust/seed.hpp"

using namespace bclust;

namespace {

TaatMatrix make_taat(const std::vector<std::vector<double>>& rows) {
  TaatMatrix tm;
  tm.rows = Matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) tm.rows.row(i)[j] = rows[i][j];
    tm.trajectory_ids.push_back("t" + std::to_string(i));
  }
  return tm;
}

double brute_mean_pairwise(const Matrix& m, const std::vector<std::size_t>& idx) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      sum += euclidean_distance(m.row(idx[a]), m.row(idx[b]));
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

// Exhaustive optimum over all size-g subsets of [0, n).
std::pair<std::vector<std::size_t>, double> exhaustive_best(const Matrix& m, int g) {
  const std::size_t n = m.rows();
  std::vector<std::size_t> pick(static_cast<std::size_t>(g));
  std::vector<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  // odometer over combinations
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  for (;;) {
    const double d = brute_mean_pairwise(m, pick);
    if (d < best_d) {
      best_d = d;
      best = pick;
    }
    int k = g - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] ==
                         n - static_cast<std::size_t>(g - k)) {
      --k;
    }
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (std::size_t j = static_cast<std::size_t>(k) + 1; j < pick.size(); ++j)
      pick[j] = pick[j - 1] + 1;
  }
  return {best, best_d};
}

}  // namespace

TEST_CASE("mcs_seed finds the exhaustive optimum on small inputs") {
  Rng rng(101);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> rows(10, std::vector<double>(2));
    for (auto& r : rows)
      for (auto& x : r) x = rng.normal();
    const TaatMatrix tm = make_taat(rows);
    const auto [best_idx, best_d] = exhaustive_best(tm.rows, 3);

    SeedConfig cfg;
    cfg.g = 3;
    cfg.z = 100000;  // >> C(10,3) = 120, hits the optimum essentially always
    cfg.rng_seed = static_cast<std::uint64_t>(trial);
    const SeedSet seed = mcs_seed(tm, cfg);
    CHECK(seed.indices == best_idx);
    CHECK(seed.mean_pairwise_distance == doctest::Approx(best_d).epsilon(1e-12));
  }
}

TEST_CASE("mcs_seed members describe themselves consistently") {
  Rng rng(103);
  std::vector<std::vector<double>> rows(20, std::vector<double>(3));
  for (auto& r : rows)
    for (auto& x : r) x = rng.normal();
  const TaatMatrix tm = make_taat(rows);
  SeedConfig cfg;
  cfg.g = 4;
  cfg.z = 5000;
  cfg.rng_seed = 7;
  const SeedSet seed = mcs_seed(tm, cfg);

  REQUIRE(seed.indices.size() == 4);
  CHECK(std::is_sorted(seed.indices.begin(), seed.indices.end()));
  CHECK(std::adjacent_find(seed.indices.begin(), seed.indices.end()) == seed.indices.end());
  for (std::size_t idx : seed.indices) CHECK(idx < 20);

  // centroid is the exact member mean
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t idx : seed.indices) s += tm.rows.row(idx)[j];
    CHECK(seed.centroid[j] == doctest::Approx(s / 4.0).epsilon(1e-12));
  }
  CHECK(seed.mean_pairwise_distance ==
        doctest::Approx(brute_mean_pairwise(tm.rows, seed.indices)).epsilon(1e-12));
}

TEST_CASE("mcs_seed is deterministic and thread-count independent") {
  Rng rng(107);
  std::vector<std::vector<double>> rows(50, std::vector<double>(2));
  for (auto& r : rows)
    for (auto& x : r) x = rng.normal();
  const TaatMatrix tm = make_taat(rows);
  SeedConfig cfg;
  cfg.g = 5;
  cfg.z = 20000;
  cfg.rng_seed = 11;

  set_max_threads(1);
  const SeedSet s1 = mcs_seed(tm, cfg);
  set_max_threads(8);
  const SeedSet s8 = mcs_seed(tm, cfg);
  set_max_threads(4);

  CHECK(s1.indices == s8.indices);
  CHECK(s1.mean_pairwise_distance == s8.mean_pairwise_distance);
  CHECK(s1.centroid == s8.centroid);
}

TEST_CASE("mcs_seed handles the degenerate whole-set case") {
  const TaatMatrix tm = make_taat({{0.0}, {1.0}, {2.0}});
  SeedConfig cfg;
  cfg.g = 3;
  cfg.z = 10;
  const SeedSet seed = mcs_seed(tm, cfg);
  CHECK(seed.indices == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("mcs_seed validates its configuration") {
  const TaatMatrix tm = make_taat({{0.0}, {1.0}, {2.0}});
  SeedConfig cfg;
  SUBCASE("subset larger than the set") { cfg.g = 4; }
  SUBCASE("subset too small") { cfg.g = 1; }
  SUBCASE("no draws") {
    cfg.g = 2;
    cfg.z = 0;
  }
  CHECK_THROWS_AS((void)mcs_seed(tm, cfg), DataError);
}

TEST_CASE("expand_seed grows to the requested share, ties to the lower index") {
  // Rows on a line; seed {4,5} has centroid 4.5. Nearest rows by distance:
  // 4 and 5 (0.5), then 3 and 6 (1.5), then 2 and 7 (2.5), ...
  const TaatMatrix tm =
      make_taat({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}, {5.0}, {6.0}, {7.0}, {8.0}, {9.0}});
  SeedConfig cfg;
  cfg.g = 2;
  cfg.z = 100;
  cfg.rng_seed = 1;
  SeedSet seed;
  seed.indices = {4, 5};
  seed.centroid = {4.5};
  seed.mean_pairwise_distance = 1.0;

  cfg.g2_fraction = 0.5;  // round(0.5 * 10) = 5 rows
  const SeedSet grown = expand_seed(tm, seed, cfg);
  REQUIRE(grown.indices.size() == 5);
  // distances to 4.5: row3/row6 tie at 1.5 -> lower index 3 wins the 5th slot
  CHECK(grown.indices == std::vector<std::size_t>{2, 3, 4, 5, 6});
  CHECK(grown.centroid[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(grown.mean_pairwise_distance ==
        doctest::Approx(brute_mean_pairwise(tm.rows, grown.indices)).epsilon(1e-12));
}

TEST_CASE("expand_seed never shrinks below the seed size") {
  const TaatMatrix tm = make_taat({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}});
  SeedConfig cfg;
  cfg.g = 3;
  cfg.g2_fraction = 0.01;  // round(0.05) = 0 -> clamped to g
  SeedSet seed;
  seed.indices = {0, 1, 2};
  seed.centroid = {1.0};
  const SeedSet grown = expand_seed(tm, seed, cfg);
  CHECK(grown.indices.size() == 3);
  CHECK(grown.indices == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("expand_seed can cover the whole set") {
  const TaatMatrix tm = make_taat({{0.0}, {1.0}, {2.0}, {3.0}});
  SeedConfig cfg;
  cfg.g = 2;
  cfg.g2_fraction = 1.0;
  SeedSet seed;
  seed.indices = {0, 1};
  seed.centroid = {0.5};
  const SeedSet grown = expand_seed(tm, seed, cfg);
  CHECK(grown.indices == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("seed_purity_experiment scores a cleanly separated dataset") {
  SynthConfig scfg;
  scfg.n_policies = 3;
  scfg.trajectories_per_policy = 12;
  scfg.traj_len = 30;
  scfg.rng_seed = 31;
  const Dataset ds = synthesize(scfg);

  const std::vector<int> gs{2, 4};
  const auto rows = seed_purity_experiment(ds, gs, 10, 2000, 3);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].g == 2);
  CHECK(rows[1].g == 4);
  for (const auto& r : rows) {
    CHECK(r.repeats == 10);
    CHECK(r.success_rate >= 0.0);
    CHECK(r.success_rate <= 1.0);
    // strongly separated fixture: the densest subset stays inside one policy
    CHECK(r.success_rate == 1.0);
  }

  // deterministic in the seed
  const auto again = seed_purity_experiment(ds, gs, 10, 2000, 3);
  CHECK(again[0].success_rate == rows[0].success_rate);
  CHECK(again[1].success_rate == rows[1].success_rate);
}

TEST_CASE("seed_purity_experiment requires labels") {
  SynthConfig scfg;
  scfg.n_policies = 2;
  scfg.trajectories_per_policy = 5;
  scfg.traj_len = 10;
  Dataset ds = synthesize(scfg);
  for (auto& t : ds.trajectories) t.label.reset();
  const std::vector<int> gs{2};
  CHECK_THROWS_AS((void)seed_purity_experiment(ds, gs, 3, 100, 0), DataError);
}
