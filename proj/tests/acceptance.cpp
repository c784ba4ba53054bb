// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "socialprobe/error.hpp"
#include "socialprobe/harness.hpp"
#include "socialprobe/selftest.hpp"

#ifndef SOCIALPROBE_DATA_DIR
#define SOCIALPROBE_DATA_DIR "data"
#endif

using namespace socialprobe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void note(const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); }

std::size_t jobs() {
  if (const char* env = std::getenv("SOCIALPROBE_JOBS")) return std::strtoul(env, nullptr, 10);
  return 0;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("socialprobe_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig base_config(const std::string& name) {
  ExperimentConfig e;
  e.data_dir = SOCIALPROBE_DATA_DIR;
  e.out_dir = scratch(name);
  e.jobs = jobs();
  return e;
}

const MetricsReport& report_for(const BenchmarkSummary& s, std::string_view model) {
  for (const MetricsReport& r : s.reports) {
    if (r.model == model) return r;
  }
  throw Error("no report for " + std::string(model));
}

bool all_ok(const BenchmarkSummary& s, std::string& why) {
  for (const RunRecord& r : s.runs) {
    if (!r.ok()) {
      why = run_file_stem(r.config) + ": " + r.error;
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

Outcome cv_baseline() {
  ExperimentConfig e = base_config("cv");
  e.models = {ModelKind::cv};
  e.seeds = {0};
  const BenchmarkSummary s = run_benchmark(e);
  std::string why;
  if (!all_ok(s, why)) return {false, why};
  const MetricsReport& r = report_for(s, "cv");
  for (const auto& [scene, cell] : r.ade) {
    note("cv " + scene + " ADE " + fmt("%.3f", cell.mean) + " FDE " + fmt("%.3f", r.fde.at(scene).mean));
  }
  const double a = r.avg_ade.mean, f = r.avg_fde.mean, h = r.ade.at("hotel").mean;
  const bool ok = std::abs(a - 0.56) <= 0.05 && std::abs(f - 1.19) <= 0.10 && std::abs(h - 0.35) <= 0.05;
  return {ok, "avg ADE " + fmt("%.3f", a) + " (0.56+/-0.05), avg FDE " + fmt("%.3f", f) +
                  " (1.19+/-0.10), hotel ADE " + fmt("%.3f", h) + " (0.35+/-0.05)"};
}

const std::vector<std::string> kRandomScenes = {"zara1", "zara2"};
const std::vector<std::string> kAllScenes(kSceneNames.begin(), kSceneNames.end());
const std::vector<std::uint64_t> kTrainedSeeds = {0, 1, 2};

// Vain under the normal protocol on every scene; shared by criteria 2 and 7.
const BenchmarkSummary& vain_normal() {
  static const BenchmarkSummary s = [] {
    ExperimentConfig e = base_config("vain_normal");
    e.models = {ModelKind::vain};
    e.scenes = kAllScenes;
    e.seeds = kTrainedSeeds;
    return run_benchmark(e);
  }();
  return s;
}

Outcome random_equivalence() {
  ExperimentConfig e = base_config("vain_random");
  e.models = {ModelKind::vain};
  e.protocol = Protocol::random;
  e.scenes = kRandomScenes;
  e.seeds = kTrainedSeeds;
  const BenchmarkSummary rnd = run_benchmark(e);
  const BenchmarkSummary& nrm = vain_normal();
  std::string why;
  if (!all_ok(rnd, why) || !all_ok(nrm, why)) return {false, why};
  const MetricsReport& a = report_for(nrm, "vain");
  const MetricsReport& b = report_for(rnd, "vain");
  bool ok = true;
  std::string detail;
  for (const std::string& scene : kRandomScenes) {
    const double da = std::abs(b.ade.at(scene).mean - a.ade.at(scene).mean);
    const double df = std::abs(b.fde.at(scene).mean - a.fde.at(scene).mean);
    note("vain " + scene + " normal ADE " + fmt("%.3f", a.ade.at(scene).mean) + " random ADE " +
         fmt("%.3f", b.ade.at(scene).mean) + " normal FDE " + fmt("%.3f", a.fde.at(scene).mean) +
         " random FDE " + fmt("%.3f", b.fde.at(scene).mean));
    ok = ok && da <= 0.07 && df <= 0.10;
    detail += scene + " |dADE| " + fmt("%.3f", da) + " |dFDE| " + fmt("%.3f", df) + "; ";
  }
  return {ok, detail + "limits 0.07 / 0.10, vain, 3 seeds"};
}

Outcome gate_closure() {
  ExperimentConfig e = base_config("vain_gates");
  e.models = {ModelKind::vain};
  e.protocol = Protocol::gates;
  e.scenes = {"zara2"};
  e.seeds = {0, 1, 2, 3, 4};
  const BenchmarkSummary s = run_benchmark(e);
  std::string why;
  if (!all_ok(s, why)) return {false, why};
  int closed = 0;
  int regressed = 0;
  double worst = -1e9;
  for (const RunRecord& r : s.runs) {
    const GateTracePoint& last = r.gate_trace.back();
    const double delta = r.test_ade - *r.pre_finetune_ade;
    worst = std::max(worst, delta);
    const bool c = last.gate_a < 0.05 && last.gate_tau > 0.95;
    closed += c;
    regressed += delta > 0.02;
    note("seed " + std::to_string(r.config.seed) + " g_tau " + fmt("%.4f", last.gate_tau) +
         " g_a " + fmt("%.4f", last.gate_a) + " pre ADE " + fmt("%.4f", *r.pre_finetune_ade) +
         " post ADE " + fmt("%.4f", r.test_ade));
  }
  const bool ok = closed >= 4 && regressed == 0;
  return {ok, std::to_string(closed) + "/5 seeds with g_a < 0.05 and g_tau > 0.95 (need 4); " +
                  "largest post-pre ADE change " + fmt("%+.4f", worst) + " m (limit +0.02 per seed)"};
}

// Synthetic windows: straight-line walkers on a 15 m square. With
// copy_neighbour the main pedestrian's future follows the first neighbour's
// velocity; otherwise it continues its own.
std::vector<TrajectoryWindow> synthetic_windows(std::size_t n, bool copy_neighbour, Rng& rng) {
  auto velocity = [&] {
    const double speed = rng.uniform(0.4, 1.6);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return Vec2{speed * std::cos(heading), speed * std::sin(heading)};
  };
  std::vector<TrajectoryWindow> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TrajectoryWindow w;
    w.scene = copy_neighbour ? "copy" : "solo";
    w.ped = 1;
    w.start_frame = static_cast<std::int64_t>(i);
    const Vec2 start{rng.uniform(3.0, 12.0), rng.uniform(3.0, 12.0)};
    const Vec2 v = velocity();
    for (std::size_t t = 0; t < kObsLen; ++t) {
      w.observed[t].pos = start + (kFrameInterval * static_cast<double>(t)) * v;
      w.observed[t].vel = v;
    }
    const std::size_t count = copy_neighbour ? 1 : 1 + rng.uniform_int(2);
    Vec2 lead{};
    for (std::size_t k = 0; k < count; ++k) {
      NeighbourTrack nb;
      nb.ped = static_cast<std::int64_t>(k + 2);
      const Vec2 offset{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      const Vec2 u = velocity();
      if (k == 0) lead = u;
      for (std::size_t t = 0; t < kObsLen; ++t) {
        nb.steps[t].pos = start + offset + (kFrameInterval * static_cast<double>(t)) * u;
        nb.steps[t].vel = u;
        nb.valid[t] = true;
      }
      w.neighbours.push_back(nb);
    }
    const Vec2 step = copy_neighbour ? lead : v;
    for (std::size_t t = 0; t < kPredLen; ++t) {
      w.future[t] = w.last_position() + (kFrameInterval * static_cast<double>(t + 1)) * step;
    }
    check_window(w);
    out.push_back(std::move(w));
  }
  return out;
}

constexpr std::size_t kSyntheticTrain = 12000;
constexpr int kSyntheticEpochs = 20;

// Returns the final deterministic attention-gate value for each seed.
std::vector<double> synthetic_gate(bool copy_neighbour, const std::vector<std::uint64_t>& seeds) {
  std::vector<double> out;
  for (std::uint64_t seed : seeds) {
    Rng rng = Rng(seed).split(copy_neighbour ? 101 : 102);
    DataSplit split;
    split.plan.held_out = "zara2";
    split.train = synthetic_windows(kSyntheticTrain, copy_neighbour, rng);
    split.val = synthetic_windows(kSyntheticTrain / 4, copy_neighbour, rng);
    split.test = synthetic_windows(kSyntheticTrain / 4, copy_neighbour, rng);
    std::vector<Vec2> positions;
    for (const auto* part : {&split.train, &split.val}) {
      for (const TrajectoryWindow& w : *part) {
        for (const AgentState& s : w.observed) positions.push_back(s.pos);
        for (Vec2 p : w.future) positions.push_back(p);
        for (const NeighbourTrack& nb : w.neighbours) {
          for (const AgentState& s : nb.steps) positions.push_back(s.pos);
        }
        split.max_neighbours = std::max(split.max_neighbours, w.neighbours.size());
      }
    }
    split.normalizer = Normalizer::fit(positions);

    RunConfig cfg;
    cfg.model = ModelKind::vain;
    cfg.protocol = Protocol::gates;
    cfg.seed = seed;
    cfg.epochs = kSyntheticEpochs;
    Rng init = Rng(seed).split(2);
    auto model = make_model(cfg.model, init);
    Trainer trainer(*model, cfg, split);
    const RunRecord r = trainer.run();
    const GateTracePoint& last = r.gate_trace.back();
    note(std::string(copy_neighbour ? "copy-neighbour" : "main-only") + " seed " +
         std::to_string(seed) + " g_tau " + fmt("%.4f", last.gate_tau) + " g_a " +
         fmt("%.4f", last.gate_a) + " pre ADE " + fmt("%.3f", *r.pre_finetune_ade) +
         " post ADE " + fmt("%.3f", r.test_ade));
    out.push_back(last.gate_a);
  }
  return out;
}

Outcome synthetic_oracle() {
  const std::vector<std::uint64_t> seeds = {0, 1};
  const std::vector<double> solo = synthetic_gate(false, seeds);
  const std::vector<double> copy = synthetic_gate(true, seeds);
  const double solo_max = *std::max_element(solo.begin(), solo.end());
  const double copy_min = *std::min_element(copy.begin(), copy.end());
  const bool ok = solo_max < 0.05 && copy_min > 0.5;
  return {ok, "main-only max g_a " + fmt("%.4f", solo_max) + " (< 0.05), copy-neighbour min g_a " +
                  fmt("%.4f", copy_min) + " (> 0.5), vain, 2 seeds each"};
}

Outcome numerical_soundness() {
  SelftestReport r = run_gradient_checks(0, 20);
  r.append(run_attention_checks(0));
  r.append(run_gate_checks(0, 1'000'000));
  std::string failed;
  double worst_grad = 0.0;
  for (const SelfCheck& c : r.checks) {
    if (c.name.rfind("gradient", 0) == 0) worst_grad = std::max(worst_grad, c.value);
    note(c.name + ": " + (c.passed ? "ok " : "FAILED ") + c.detail);
    if (!c.passed) failed += c.name + " ";
  }
  return {r.ok(), std::to_string(r.checks.size()) + " checks, worst gradient relative error " +
                      fmt("%.2e", worst_grad) + (failed.empty() ? "" : "; failed: " + failed)};
}

Outcome metric_oracle() {
  const SelftestReport r = run_metric_oracle(0, 10'000);
  std::vector<Vec2> truth(12), shifted(12);
  for (std::size_t t = 0; t < 12; ++t) {
    truth[t] = {0.3 * static_cast<double>(t), 1.0};
    shifted[t] = truth[t] + Vec2{0.5, 0.0};
  }
  const std::vector<Vec2> two_truth = {{0.0, 0.0}, {0.0, 0.0}};
  const std::vector<Vec2> two_pred = {{0.0, 0.0}, {3.0, 4.0}};
  const bool hand = ade(shifted, truth) == 0.5 && fde(shifted, truth) == 0.5 &&
                    ade(two_pred, two_truth) == 2.5 && fde(two_pred, two_truth) == 5.0;
  double worst = 0.0;
  for (const SelfCheck& c : r.checks) worst = std::max(worst, c.value);
  return {r.ok() && hand, "10^4 pairs, largest loop deviation " + fmt("%.2e", worst) +
                              " (limit 1e-12); hand cases " + (hand ? "exact" : "WRONG")};
}

Outcome ordering_sanity() {
  ExperimentConfig e = base_config("naive");
  e.models = {ModelKind::basic_mlp, ModelKind::lstm_mlp};
  e.scenes = kAllScenes;
  e.seeds = kTrainedSeeds;
  const BenchmarkSummary naive = run_benchmark(e);
  const BenchmarkSummary& social = vain_normal();
  std::string why;
  if (!all_ok(naive, why) || !all_ok(social, why)) return {false, why};
  const double v = report_for(social, "vain").avg_ade.mean;
  bool ok = true;
  std::string detail = "vain avg ADE " + fmt("%.3f", v);
  for (const char* m : {"basic_mlp", "lstm_mlp"}) {
    const double a = report_for(naive, m).avg_ade.mean;
    ok = ok && a <= v + 0.05;
    detail += std::string(", ") + m + " " + fmt("%.3f", a);
  }
  return {ok, detail + " over all five scenes, 3 seeds (naive <= social + 0.05)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 cv-baseline", cv_baseline},
      {"2 random-neighbour-equivalence", random_equivalence},
      {"3 gate-closure-zara2", gate_closure},
      {"4 synthetic-gate-oracle", synthetic_oracle},
      {"5 numerical-soundness", numerical_soundness},
      {"6 metric-oracle", metric_oracle},
      {"7 ordering-sanity", ordering_sanity},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted.empty() && !wanted.count(static_cast<int>(i + 1))) continue;
    const auto& [name, fn] = criteria[i];
    std::fprintf(stderr, "[%s]\n", name.c_str());
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
