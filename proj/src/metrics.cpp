// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>

#include "socialprobe/error.hpp"

namespace socialprobe {

namespace {

void check_pair(std::span<const Vec2> predicted, std::span<const Vec2> truth, const char* what) {
  if (predicted.size() != truth.size()) {
    throw Error(std::string(what) + ": predicted length " + std::to_string(predicted.size()) +
                " != truth length " + std::to_string(truth.size()));
  }
  if (predicted.empty()) throw Error(std::string(what) + ": empty prediction");
}

}  // namespace

double ade(std::span<const Vec2> predicted, std::span<const Vec2> truth) {
  check_pair(predicted, truth, "ade");
  double total = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) total += (predicted[t] - truth[t]).norm();
  return total / static_cast<double>(predicted.size());
}

double fde(std::span<const Vec2> predicted, std::span<const Vec2> truth) {
  check_pair(predicted, truth, "fde");
  return (predicted.back() - truth.back()).norm();
}

CellStats cell_stats(std::span<const double> values) {
  CellStats c;
  c.values.assign(values.begin(), values.end());
  if (values.empty()) return c;
  double sum = 0.0;
  for (double v : values) sum += v;
  c.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - c.mean) * (v - c.mean);
  c.std = std::sqrt(var / static_cast<double>(values.size()));
  return c;
}

std::string format_cell(const CellStats& cell, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f +/- %.*f", decimals, cell.mean, decimals, cell.std);
  return buf;
}

MetricsReport aggregate(std::span<const RunMetrics> runs, const std::string& model,
                        const std::string& protocol, std::span<const std::string> scenes) {
  MetricsReport r;
  r.model = model;
  r.protocol = protocol;
  r.scenes.assign(scenes.begin(), scenes.end());

  std::set<std::uint64_t> seeds;
  for (const RunMetrics& m : runs) seeds.insert(m.seed);
  r.seeds.assign(seeds.begin(), seeds.end());

  std::string missing;
  for (const std::string& scene : scenes) {
    std::vector<double> a, f;
    for (const RunMetrics& m : runs) {
      if (m.scene != scene) continue;
      a.push_back(m.ade);
      f.push_back(m.fde);
    }
    if (a.empty()) {
      missing += (missing.empty() ? "" : ", ") + scene;
      continue;
    }
    r.ade[scene] = cell_stats(a);
    r.fde[scene] = cell_stats(f);
  }
  if (!missing.empty()) {
    throw Error("aggregate " + model + "/" + protocol + ": no runs for scene(s) " + missing);
  }

  std::vector<double> avg_a, avg_f;
  for (std::uint64_t seed : r.seeds) {
    double sa = 0.0, sf = 0.0;
    std::size_t hit = 0;
    for (const std::string& scene : scenes) {
      auto it = std::find_if(runs.begin(), runs.end(), [&](const RunMetrics& m) {
        return m.seed == seed && m.scene == scene;
      });
      if (it == runs.end()) break;
      sa += it->ade;
      sf += it->fde;
      ++hit;
    }
    if (hit != scenes.size()) continue;
    avg_a.push_back(sa / static_cast<double>(hit));
    avg_f.push_back(sf / static_cast<double>(hit));
  }
  if (avg_a.empty()) {
    throw Error("aggregate " + model + "/" + protocol + ": no seed covers every scene");
  }
  r.avg_ade = cell_stats(avg_a);
  r.avg_fde = cell_stats(avg_f);
  return r;
}

std::string table_csv(std::span<const MetricsReport> reports) {
  std::string out = "metric,scene";
  for (const MetricsReport& r : reports) {
    out += "," + r.model + (r.protocol == "normal" ? "" : "(" + r.protocol + ")");
  }
  out += "\n";
  if (reports.empty()) return out;
  for (const char* metric : {"ADE", "FDE"}) {
    const bool is_ade = metric[0] == 'A';
    auto row = [&](const std::string& label, auto cell_of) {
      out += std::string(metric) + "," + label;
      for (const MetricsReport& r : reports) out += "," + cell_of(r);
      out += "\n";
    };
    for (const std::string& scene : reports.front().scenes) {
      row(scene, [&](const MetricsReport& r) {
        const auto& cells = is_ade ? r.ade : r.fde;
        auto it = cells.find(scene);
        return it == cells.end() ? std::string("n/a") : format_cell(it->second);
      });
    }
    row("AVG", [&](const MetricsReport& r) { return format_cell(is_ade ? r.avg_ade : r.avg_fde); });
  }
  return out;
}

std::string report_json(const MetricsReport& report) {
  auto cell = [](const CellStats& c) {
    return nlohmann::ordered_json{{"mean", c.mean}, {"std", c.std}, {"values", c.values},
                                  {"cell", format_cell(c)}};
  };
  nlohmann::ordered_json doc;
  doc["model"] = report.model;
  doc["protocol"] = report.protocol;
  doc["seeds"] = report.seeds;
  doc["scenes"] = report.scenes;
  for (const std::string& s : report.scenes) {
    doc["ADE"][s] = cell(report.ade.at(s));
    doc["FDE"][s] = cell(report.fde.at(s));
  }
  doc["ADE"]["AVG"] = cell(report.avg_ade);
  doc["FDE"]["AVG"] = cell(report.avg_fde);
  return doc.dump(2);
}

void write_report(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = "report_" + report.model + "_" + report.protocol;
  std::ofstream csv(dir / (stem + ".csv"));
  std::ofstream json(dir / (stem + ".json"));
  if (!csv || !json) throw IoError("cannot write report into " + dir.string());
  csv << table_csv(std::span<const MetricsReport>(&report, 1));
  json << report_json(report) << "\n";
}

}  // namespace socialprobe
