#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bclust/report.hpp"
#include "bclust/rng.hpp"

using namespace bclust;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bclust_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("format_number uses shortest round-trip decimal form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0) == "1.0");
  CHECK(format_number(-3.5) == "-3.5");
  CHECK(format_number(0.0) == "0.0");

  // Round trip is exact: parsing the text recovers the same double.
  Rng rng(301);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.normal(0.0, 1e3);
    CHECK(std::stod(format_number(x)) == x);
  }
  const double tiny = 1e-17;
  CHECK(std::stod(format_number(tiny)) == tiny);
}

TEST_CASE("assignment csv round-trips ids and clusters") {
  const auto path = temp_file("assign.csv");
  const std::vector<std::string> ids{"p0_t0", "p0_t1", "weird,id", "p1_t0"};
  const std::vector<int> clusters{0, 0, 2, 1};
  write_assignment_csv(path, ids, clusters);

  const auto rows = read_assignment_csv(path);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].first == ids[i]);  // trailing-comma split keeps the odd id
    CHECK(rows[i].second == clusters[i]);
  }

  // identical input produces identical bytes
  const auto path2 = temp_file("assign2.csv");
  write_assignment_csv(path2, ids, clusters);
  CHECK(slurp(path) == slurp(path2));

  const std::string text = slurp(path);
  CHECK(text.rfind("trajectory_id,cluster_id\n", 0) == 0);
}

TEST_CASE("write_assignment_csv rejects mismatched spans") {
  const std::vector<std::string> ids{"a", "b"};
  const std::vector<int> clusters{0};
  CHECK_THROWS_AS(write_assignment_csv(temp_file("bad.csv"), ids, clusters), DataError);
}

TEST_CASE("read_assignment_csv validates header and rows") {
  const auto path = temp_file("malformed.csv");
  SUBCASE("missing file") {
    CHECK_THROWS_AS((void)read_assignment_csv(temp_file("nope.csv")), DataError);
  }
  SUBCASE("wrong header") {
    spit(path, "id,cluster\na,0\n");
    CHECK_THROWS_AS((void)read_assignment_csv(path), DataError);
  }
  SUBCASE("missing comma") {
    spit(path, "trajectory_id,cluster_id\nrow-without-comma\n");
    CHECK_THROWS_WITH_AS(read_assignment_csv(path), doctest::Contains("line 2"), DataError);
  }
  SUBCASE("non-integer cluster") {
    spit(path, "trajectory_id,cluster_id\na,zero\n");
    CHECK_THROWS_WITH_AS(read_assignment_csv(path), doctest::Contains("line 2"), DataError);
  }
  SUBCASE("blank lines are skipped") {
    spit(path, "trajectory_id,cluster_id\na,0\n\nb,1\n");
    const auto rows = read_assignment_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].first == "b");
  }
}

TEST_CASE("elbow csv writes the exact expected text") {
  const auto path = temp_file("elbow.csv");
  const std::vector<ElbowPoint> curve{{1, 100.0}, {2, 25.5}, {3, 10.125}};
  write_elbow_csv(path, curve);
  CHECK(slurp(path) == "k,sse\n1,100.0\n2,25.5\n3,10.125\n");
}

TEST_CASE("ratio csv writes the exact expected text") {
  const auto path = temp_file("ratio.csv");
  PercentileRatioCurve curve;
  curve.percentiles = {5.0, 100.0};
  curve.ratios = {0.5, 0.925};
  write_ratio_csv(path, curve);
  CHECK(slurp(path) == "percentile,ratio\n5.0,0.5\n100.0,0.925\n");
}

TEST_CASE("wlln csv flattens label curves in key order") {
  const auto path = temp_file("wlln.csv");
  std::map<int, WllnCurve> curves;
  curves[1].lengths = {25, 50};
  curves[1].mean_distance = {0.5, 0.25};
  curves[0].lengths = {25, 50};
  curves[0].mean_distance = {1.0, 0.75};
  write_wlln_csv(path, curves);
  CHECK(slurp(path) ==
        "label,length,mean_distance\n0,25,1.0\n0,50,0.75\n1,25,0.5\n1,50,0.25\n");
}

TEST_CASE("purity csv writes the exact expected text") {
  const auto path = temp_file("purity.csv");
  const std::vector<PurityRow> rows{{2, 100, 1.0}, {4, 100, 0.97}};
  write_purity_csv(path, rows);
  CHECK(slurp(path) == "g,repeats,success_rate\n2,100,1.0\n4,100,0.97\n");
}

TEST_CASE("grid csv writes the exact expected text") {
  const auto path = temp_file("grid.csv");
  std::vector<DbscanGridCell> cells(2);
  cells[0].params = {0.5, 4};
  cells[0].ari = 0.75;
  cells[0].n_clusters = 3;
  cells[0].n_noise = 10;
  cells[1].params = {1.0, 5};
  cells[1].ari = 1.0;
  cells[1].n_clusters = 2;
  cells[1].n_noise = 0;
  write_grid_csv(path, cells);
  CHECK(slurp(path) ==
        "eps,min_pts,ari,n_clusters,n_noise\n0.5,4,0.75,3,10\n1.0,5,1.0,2,0\n");
}
