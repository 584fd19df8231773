#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "bclust/features.hpp"
#include "bclust/metrics.hpp"
#include "bclust/parallel.hpp"
#include "bclust/rng.hpp"

using namespace bclust;

namespace {

Trajectory make_traj(const std::string& id, const std::vector<std::vector<double>>& actions,
                     int label = 0) {
  Trajectory traj;
  traj.id = id;
  traj.label = label;
  for (const auto& a : actions) {
    Transition tr;
    tr.state = {0.0};
    tr.action = a;
    traj.transitions.push_back(tr);
  }
  return traj;
}

Dataset make_dataset(int action_dim, const std::vector<Trajectory>& trajs) {
  Dataset ds;
  ds.state_dim = 1;
  ds.action_dim = action_dim;
  ds.trajectories = trajs;
  return ds;
}

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.row(i)[j] = rows[i][j];
  return m;
}

}  // namespace

TEST_CASE("taat is the exact per-component action mean") {
  const auto traj = make_traj("a", {{1.0, 3.0}, {3.0, 5.0}});
  CHECK(taat(traj) == std::vector<double>{2.0, 4.0});

  const auto single = make_traj("b", {{-2.5, 0.0}});
  CHECK(taat(single) == std::vector<double>{-2.5, 0.0});

  CHECK_THROWS_AS((void)taat(Trajectory{}), DataError);
}

TEST_CASE("taat keeps precision when a large offset dominates") {
  // Compensated summation: alternating tiny values around a huge offset must
  // still average back to the offset exactly.
  std::vector<std::vector<double>> actions;
  for (int i = 0; i < 10000; ++i) actions.push_back({1e12 + (i % 2 == 0 ? 0.5 : -0.5)});
  const auto traj = make_traj("big", actions);
  CHECK(taat(traj)[0] == doctest::Approx(1e12).epsilon(1e-15));
}

TEST_CASE("taat_geometric matches the closed form and respects the shift") {
  const auto traj = make_traj("g", {{1.0, 3.0}, {3.0, 5.0}});
  const auto g0 = taat_geometric(traj, 0.0);
  CHECK(g0[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK(g0[1] == doctest::Approx(std::sqrt(15.0)).epsilon(1e-12));

  const double shift = 2.0;
  const auto g2 = taat_geometric(traj, shift);
  CHECK(g2[0] == doctest::Approx(std::sqrt(3.0 * 5.0) - 2.0).epsilon(1e-12));
  CHECK(g2[1] == doctest::Approx(std::sqrt(5.0 * 7.0) - 2.0).epsilon(1e-12));
}

TEST_CASE("taat_geometric never exceeds the arithmetic mean on positives") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> actions;
    for (int t = 0; t < 15; ++t)
      actions.push_back({rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0)});
    const auto traj = make_traj("amgm", actions);
    const auto arith = taat(traj);
    const auto geo = taat_geometric(traj, 0.0);
    for (std::size_t j = 0; j < arith.size(); ++j) CHECK(geo[j] <= arith[j] + 1e-12);
  }
}

TEST_CASE("taat_geometric rejects non-positive shifted components") {
  const auto traj = make_traj("neg", {{-1.0, 2.0}});
  CHECK_THROWS_AS((void)taat_geometric(traj, 0.0), DataError);
  CHECK_THROWS_AS((void)taat_geometric(traj, 1.0), DataError);  // -1+1 == 0
  CHECK_NOTHROW((void)taat_geometric(traj, 1.5));
}

TEST_CASE("taat_matrix preserves order and is thread-count independent") {
  Dataset ds = make_dataset(
      2, {make_traj("t0", {{1.0, 3.0}, {3.0, 5.0}}), make_traj("t1", {{0.0, 0.0}}),
          make_traj("t2", {{2.0, 2.0}, {4.0, 4.0}, {6.0, 6.0}})});
  const TaatMatrix one = [&] {
    set_max_threads(1);
    return taat_matrix(ds);
  }();
  const TaatMatrix many = [&] {
    set_max_threads(8);
    return taat_matrix(ds);
  }();
  set_max_threads(0);

  REQUIRE(one.rows.rows() == 3);
  CHECK(one.trajectory_ids == std::vector<std::string>{"t0", "t1", "t2"});
  CHECK(one.rows.row(0)[0] == 2.0);
  CHECK(one.rows.row(0)[1] == 4.0);
  CHECK(one.rows.row(2)[0] == 4.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(one.rows.row(i)[j] == many.rows.row(i)[j]);

  const TaatMatrix geo = taat_matrix(ds, TaatKind::kGeometric, 1.0);
  CHECK(geo.kind == TaatKind::kGeometric);
  CHECK(geo.rows.row(1)[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("percentile_ratio matches a hand-enumerated fixture") {
  // Set A: two points at distance 1. Set B: cross distances {9, 10, 13, 14}.
  const Matrix a = from_rows({{0.0, 0.0}, {1.0, 0.0}});
  const Matrix b = from_rows({{10.0, 0.0}, {14.0, 0.0}});
  const std::vector<double> ps{50.0, 100.0};
  const auto curve = percentile_ratio(a, b, ps);
  REQUIRE(curve.percentiles == ps);
  REQUIRE(curve.ratios.size() == 2);
  // p=50: within keeps max(1, floor(0.5*1)) = 1 -> mean 1; cross keeps
  // floor(0.5*4) = 2 -> mean (9+10)/2.
  CHECK(curve.ratios[0] == doctest::Approx(1.0 / 9.5).epsilon(1e-12));
  // p=100: 1 / mean(9,10,13,14).
  CHECK(curve.ratios[1] == doctest::Approx(1.0 / 11.5).epsilon(1e-12));
}

TEST_CASE("percentile_ratio validates percentiles and set sizes") {
  const Matrix a = from_rows({{0.0}, {1.0}});
  const Matrix b = from_rows({{5.0}, {6.0}});
  SUBCASE("zero percentile") {
    const std::vector<double> ps{0.0};
    CHECK_THROWS_AS((void)percentile_ratio(a, b, ps), DataError);
  }
  SUBCASE("above 100") {
    const std::vector<double> ps{100.5};
    CHECK_THROWS_AS((void)percentile_ratio(a, b, ps), DataError);
  }
  SUBCASE("too few rows") {
    const Matrix single = from_rows({{0.0}});
    const std::vector<double> ps{100.0};
    CHECK_THROWS_AS((void)percentile_ratio(single, b, ps), DataError);
  }
  SUBCASE("coincident sets") {
    const Matrix same = from_rows({{1.0}, {1.0}});
    const std::vector<double> ps{50.0};
    CHECK_THROWS_AS((void)percentile_ratio(same, same, ps), DegenerateInputError);
  }
}

TEST_CASE("wlln_curve is exact on constant-action groups") {
  // Two trajectories with constant actions a and b: every truncation mean is
  // a or b, the pooled mean is (a+b)/2, so D(L) = |a-b|/2 for every L.
  std::vector<std::vector<double>> ca(6, std::vector<double>{1.0});
  std::vector<std::vector<double>> cb(6, std::vector<double>{5.0});
  Dataset ds = make_dataset(1, {make_traj("x", ca, 0), make_traj("y", cb, 0)});
  const std::vector<int> lengths{1, 2, 4, 6};
  const auto curves = wlln_curve(ds, lengths);
  REQUIRE(curves.size() == 1);
  const WllnCurve& c = curves.at(0);
  CHECK(c.lengths == lengths);
  CHECK(c.reference_mean == std::vector<double>{3.0});
  for (double d : c.mean_distance) CHECK(d == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("wlln_curve keys one curve per label group") {
  std::vector<std::vector<double>> acts(4, std::vector<double>{2.0});
  Dataset ds = make_dataset(1, {make_traj("x", acts, 3), make_traj("y", acts, 3),
                                make_traj("z", acts, 7)});
  const std::vector<int> lengths{2, 4};
  const auto curves = wlln_curve(ds, lengths);
  REQUIRE(curves.size() == 2);
  CHECK(curves.count(3) == 1);
  CHECK(curves.count(7) == 1);
  // A group with identical trajectories converges to distance zero.
  for (double d : curves.at(3).mean_distance) CHECK(d == 0.0);
}

TEST_CASE("wlln_curve shrinks with length on i.i.d.-action data") {
  SynthConfig cfg;
  cfg.n_policies = 2;
  cfg.trajectories_per_policy = 40;
  cfg.traj_len = 160;
  cfg.weight_scale = 0.0;  // actions i.i.d. around the policy bias
  cfg.action_noise_std = 0.5;
  cfg.rng_seed = 19;
  const Dataset ds = synthesize(cfg);
  const std::vector<int> lengths{10, 40, 160};
  const auto curves = wlln_curve(ds, lengths);
  for (const auto& [label, curve] : curves) {
    REQUIRE(curve.mean_distance.size() == 3);
    CHECK(curve.mean_distance[0] > curve.mean_distance[1]);
    CHECK(curve.mean_distance[1] > curve.mean_distance[2]);
    // i.i.d. rate: D(L) ~ 1/sqrt(L), so quadrupling L should roughly halve D.
    CHECK(curve.mean_distance[2] < 0.8 * curve.mean_distance[0]);
  }
}

TEST_CASE("wlln_curve validates lengths and labels") {
  std::vector<std::vector<double>> acts(5, std::vector<double>{1.0});
  Dataset ds = make_dataset(1, {make_traj("x", acts, 0)});
  SUBCASE("length beyond the shortest trajectory") {
    const std::vector<int> lengths{6};
    CHECK_THROWS_AS((void)wlln_curve(ds, lengths), DataError);
  }
  SUBCASE("non-positive length") {
    const std::vector<int> lengths{0};
    CHECK_THROWS_AS((void)wlln_curve(ds, lengths), DataError);
  }
  SUBCASE("missing labels") {
    ds.trajectories[0].label.reset();
    const std::vector<int> lengths{2};
    CHECK_THROWS_AS((void)wlln_curve(ds, lengths), DataError);
  }
}

TEST_CASE("clustering_trend_metrics equals the metrics on the aggregated rows") {
  SynthConfig cfg;
  cfg.n_policies = 3;
  cfg.trajectories_per_policy = 15;
  cfg.traj_len = 30;
  cfg.rng_seed = 29;
  const Dataset ds = synthesize(cfg);
  const TaatMatrix tm = taat_matrix(ds);
  const auto labels = ds.labels();
  const TrendMetrics tr = clustering_trend_metrics(tm, labels);
  CHECK(tr.silhouette == silhouette(tm.rows, labels));
  CHECK(tr.calinski_harabasz == calinski_harabasz(tm.rows, labels));
  CHECK(tr.davies_bouldin == davies_bouldin(tm.rows, labels));
}

TEST_CASE("within-policy aggregated distances fall below cross-policy ones") {
  SynthConfig cfg;
  cfg.n_policies = 3;
  cfg.trajectories_per_policy = 20;
  cfg.traj_len = 40;
  cfg.rng_seed = 47;
  const Dataset ds = synthesize(cfg);
  const TaatMatrix tm = taat_matrix(ds);
  const auto labels = ds.labels();
  double within = 0.0, cross = 0.0;
  std::size_t n_within = 0, n_cross = 0;
  for (std::size_t i = 0; i < tm.rows.rows(); ++i)
    for (std::size_t j = i + 1; j < tm.rows.rows(); ++j) {
      const double d = euclidean_distance(tm.rows.row(i), tm.rows.row(j));
      if (labels[i] == labels[j]) {
        within += d;
        ++n_within;
      } else {
        cross += d;
        ++n_cross;
      }
    }
  CHECK(within / n_within < cross / n_cross);
}
