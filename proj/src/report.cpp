#include "bclust/report.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace bclust {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::string format_number(double value) { return nlohmann::json(value).dump(); }

void write_assignment_csv(const std::filesystem::path& path,
                          std::span<const std::string> trajectory_ids,
                          std::span<const int> cluster_ids) {
  if (trajectory_ids.size() != cluster_ids.size()) {
    throw DataError("write_assignment_csv: id/cluster count mismatch");
  }
  std::ofstream out = open_out(path);
  out << "trajectory_id,cluster_id\n";
  for (std::size_t i = 0; i < trajectory_ids.size(); ++i) {
    out << trajectory_ids[i] << ',' << cluster_ids[i] << '\n';
  }
}

std::vector<std::pair<std::string, int>> read_assignment_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("trajectory_id,", 0) != 0) {
    throw DataError("'" + path.string() + "': expected a trajectory_id,cluster_id header");
  }
  std::vector<std::pair<std::string, int>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw DataError("'" + path.string() + "' line " + std::to_string(line_no) +
                      ": missing comma");
    }
    try {
      rows.emplace_back(line.substr(0, comma), std::stoi(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw DataError("'" + path.string() + "' line " + std::to_string(line_no) +
                      ": malformed cluster id");
    }
  }
  return rows;
}

void write_elbow_csv(const std::filesystem::path& path, std::span<const ElbowPoint> curve) {
  std::ofstream out = open_out(path);
  out << "k,sse\n";
  for (const ElbowPoint& p : curve) out << p.k << ',' << format_number(p.sse) << '\n';
}

void write_ratio_csv(const std::filesystem::path& path, const PercentileRatioCurve& curve) {
  std::ofstream out = open_out(path);
  out << "percentile,ratio\n";
  for (std::size_t i = 0; i < curve.percentiles.size(); ++i) {
    out << format_number(curve.percentiles[i]) << ',' << format_number(curve.ratios[i]) << '\n';
  }
}

void write_wlln_csv(const std::filesystem::path& path, const std::map<int, WllnCurve>& curves) {
  std::ofstream out = open_out(path);
  out << "label,length,mean_distance\n";
  for (const auto& [label, curve] : curves) {
    for (std::size_t i = 0; i < curve.lengths.size(); ++i) {
      out << label << ',' << curve.lengths[i] << ',' << format_number(curve.mean_distance[i])
          << '\n';
    }
  }
}

void write_purity_csv(const std::filesystem::path& path, std::span<const PurityRow> table) {
  std::ofstream out = open_out(path);
  out << "g,repeats,success_rate\n";
  for (const PurityRow& row : table) {
    out << row.g << ',' << row.repeats << ',' << format_number(row.success_rate) << '\n';
  }
}

void write_grid_csv(const std::filesystem::path& path, std::span<const DbscanGridCell> cells) {
  std::ofstream out = open_out(path);
  out << "eps,min_pts,ari,n_clusters,n_noise\n";
  for (const DbscanGridCell& cell : cells) {
    out << format_number(cell.params.eps) << ',' << cell.params.min_pts << ','
        << format_number(cell.ari) << ',' << cell.n_clusters << ',' << cell.n_noise << '\n';
  }
}

}  // namespace bclust
