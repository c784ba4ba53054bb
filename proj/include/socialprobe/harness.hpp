// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socialprobe/data.hpp"
#include "socialprobe/metrics.hpp"
#include "socialprobe/models.hpp"
#include "socialprobe/optim.hpp"

namespace socialprobe {

enum class Protocol { normal, random, gates };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view name);

inline constexpr int kSocialEpochs = 20;
inline constexpr int kNaiveEpochs = 10;
inline constexpr std::size_t kBatchSize = 32;
inline constexpr double kLearningRate = 0.001;
inline constexpr double kValFraction = 0.2;
inline constexpr int kPlateauPatience = 3;

int default_epochs(ModelKind kind);

/// Everything needed to replay one (model, protocol, held-out scene, seed) run.
struct RunConfig {
  ModelKind model = ModelKind::vain;
  Protocol protocol = Protocol::normal;
  std::string scene = "zara2";
  std::uint64_t seed = 0;
  int epochs = kSocialEpochs;  // pre-training and, for gates, fine-tuning each
  double lr = kLearningRate;
  std::size_t batch = kBatchSize;
  double lambda = kDefaultL0Lambda;
  double val_fraction = kValFraction;
  bool augment = true;
  std::filesystem::path data_dir = "data";

  /// Throws ConfigError for invalid combinations.
  void validate() const;
};

/// A benchmark request: the cross product of models, scenes and seeds.
struct ExperimentConfig {
  std::vector<ModelKind> models = {ModelKind::vain};
  Protocol protocol = Protocol::normal;
  std::vector<std::string> scenes = {"eth", "hotel", "univ", "zara1", "zara2"};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
  std::optional<int> epochs;
  double lr = kLearningRate;
  std::size_t batch = kBatchSize;
  double lambda = kDefaultL0Lambda;
  double val_fraction = kValFraction;
  bool augment = true;
  std::size_t jobs = 0;  // 0: hardware concurrency

  std::vector<RunConfig> expand() const;
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  std::string phase;  // "train" or "finetune"
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct GateTracePoint {
  int epoch = 0;
  double gate_tau = 0.0;
  double gate_a = 0.0;
};

struct RunRecord {
  RunConfig config;
  std::string status = "ok";
  std::string error;
  std::vector<EpochLog> epochs;
  double test_ade = 0.0;
  double test_fde = 0.0;
  std::optional<double> pre_finetune_ade;
  std::optional<double> pre_finetune_fde;
  std::vector<GateTracePoint> gate_trace;
  std::vector<std::string> warnings;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
  std::size_t test_windows = 0;
  std::size_t max_neighbours = 0;
  double duration_s = 0.0;

  bool ok() const { return status == "ok"; }
};

struct TestMetrics {
  double ade = 0.0;
  double fde = 0.0;
  std::size_t windows = 0;
};

using Logger = std::function<void(const std::string&)>;

/// Trains a model on one split under the run's protocol. Mutates `model`.
class Trainer {
 public:
  Trainer(Model& model, const RunConfig& config, const DataSplit& split);

  /// One pass over the training windows; returns mean batch MSE.
  double train_epoch(bool with_penalty);
  /// Mean MSE over validation windows in eval mode.
  double validation_loss();
  TestMetrics evaluate(std::span<const TrajectoryWindow> windows);

  /// Full protocol: plain training, or pre-training + gated fine-tuning.
  RunRecord run(const Logger& log = {});

  AdamState& optimizer() { return adam_; }

 private:
  std::vector<TrajectoryWindow> prepare(std::span<const TrajectoryWindow* const> windows,
                                        bool augment, bool randomize, Rng& rng, Rng& noise);

  Model& model_;
  RunConfig config_;
  const DataSplit& split_;
  std::vector<Parameter*> params_;
  AdamState adam_;
  Rng shuffle_rng_;
  Rng gate_rng_;
  Rng noise_rng_;
};

/// Mean ADE/FDE (meters) of `model` over windows, real neighbours, eval mode.
TestMetrics evaluate_model(Model& model, std::span<const TrajectoryWindow> windows,
                           const Normalizer& norm, std::size_t batch = 64);

/// True when the best validation loss improved by less than 1% over the last
/// `patience` epochs.
bool has_plateaued(std::span<const double> val_losses, int patience = kPlateauPatience);

/// Builds the split and model for `config` and trains it. Exceptions are
/// caught and reported in the record's status.
RunRecord run_single(const RunConfig& config, std::span<const Scene> scenes,
                     const Logger& log = {});

struct BenchmarkSummary {
  std::vector<RunRecord> runs;
  std::vector<MetricsReport> reports;
  std::vector<std::string> warnings;
};

BenchmarkSummary run_benchmark(const ExperimentConfig& config, const Logger& log = {});

/// Per-run gate trace CSVs plus the combined long-format file.
/// Returns the written paths (combined file last).
std::vector<std::filesystem::path> emit_plots(std::span<const RunRecord> runs,
                                              const std::filesystem::path& out_dir);

/// Rebuilds every report, table and plot file from out_dir/runs/*.json.
BenchmarkSummary regenerate_reports(const std::filesystem::path& out_dir);

std::string run_file_stem(const RunConfig& c);
std::string to_json(const RunRecord& r);
RunRecord run_record_from_json(const std::string& text);
std::string to_json(const RunConfig& c);
RunConfig run_config_from_json(const std::string& text);
/// Overlays keys present in `text` onto `base`.
ExperimentConfig experiment_config_from_json(const std::string& text, ExperimentConfig base = {});
std::string to_json(const ExperimentConfig& c);

/// "0..4" or "0,2,3" or "7".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace socialprobe
