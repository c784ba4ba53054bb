// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "socialprobe/data.hpp"

namespace socialprobe {

/// Mean L2 distance over the horizon. Throws on length mismatch or empty input.
double ade(std::span<const Vec2> predicted, std::span<const Vec2> truth);
/// L2 distance at the final step.
double fde(std::span<const Vec2> predicted, std::span<const Vec2> truth);

/// Mean and population standard deviation over repeats.
struct CellStats {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> values;
};

CellStats cell_stats(std::span<const double> values);
/// "0.56 +/- 0.02"
std::string format_cell(const CellStats& cell, int decimals = 2);

/// Test-set metrics of one (scene, seed) run.
struct RunMetrics {
  std::string scene;
  std::uint64_t seed = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct MetricsReport {
  std::string model;
  std::string protocol;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> scenes;
  std::map<std::string, CellStats> ade;
  std::map<std::string, CellStats> fde;
  CellStats avg_ade;
  CellStats avg_fde;
};

/// Per-scene mean/std over seeds. The AVG row averages each seed's scene
/// values, then takes mean/std over the seeds that cover every scene.
/// Throws Error listing scenes with no runs.
MetricsReport aggregate(std::span<const RunMetrics> runs, const std::string& model,
                        const std::string& protocol, std::span<const std::string> scenes);

/// Rows: scenes then AVG, for ADE then FDE; one column per report.
std::string table_csv(std::span<const MetricsReport> reports);
std::string report_json(const MetricsReport& report);

void write_report(const MetricsReport& report, const std::filesystem::path& dir);

}  // namespace socialprobe
