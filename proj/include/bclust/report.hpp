#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bclust/baselines.hpp"
#include "bclust/features.hpp"
#include "bclust/seed.hpp"

namespace bclust {

// CSV emission for every tabular artifact, plus assignment-file parsing for
// evaluation. All numbers are written in shortest-round-trip form so equal
// runs produce byte-identical files.

/// Formats a double exactly as the JSON reports do.
std::string format_number(double value);

void write_assignment_csv(const std::filesystem::path& path,
                          std::span<const std::string> trajectory_ids,
                          std::span<const int> cluster_ids);

/// Reads a trajectory_id,cluster_id file (header required).
std::vector<std::pair<std::string, int>> read_assignment_csv(const std::filesystem::path& path);

void write_elbow_csv(const std::filesystem::path& path, std::span<const ElbowPoint> curve);

void write_ratio_csv(const std::filesystem::path& path, const PercentileRatioCurve& curve);

void write_wlln_csv(const std::filesystem::path& path, const std::map<int, WllnCurve>& curves);

void write_purity_csv(const std::filesystem::path& path, std::span<const PurityRow> table);

void write_grid_csv(const std::filesystem::path& path, std::span<const DbscanGridCell> cells);

}  // namespace bclust
