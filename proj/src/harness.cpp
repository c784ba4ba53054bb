// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "socialprobe/error.hpp"

namespace socialprobe {

using json = nlohmann::ordered_json;

namespace {

// Independent RNG streams derived from the run seed.
enum Stream : std::uint64_t {
  kSplitStream = 1,
  kInitStream = 2,
  kShuffleStream = 3,
  kGateStream = 4,
  kNoiseStream = 5,
  kValNoiseStream = 6,
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fmt(double v, int decimals = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void check_social_protocol(ModelKind kind, Protocol protocol) {
  if (protocol != Protocol::normal && !is_social(kind)) {
    throw ConfigError("protocol '" + std::string(to_string(protocol)) +
                      "' needs a social model, got '" + std::string(to_string(kind)) + "'");
  }
}

void check_common(double lr, std::size_t batch, double lambda, double val_fraction) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must be in (0, 1)");
  }
}

}  // namespace

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::normal: return "normal";
    case Protocol::random: return "random";
    case Protocol::gates: return "gates";
  }
  return "?";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "normal") return Protocol::normal;
  if (name == "random") return Protocol::random;
  if (name == "gates") return Protocol::gates;
  throw ConfigError("unknown protocol '" + std::string(name) + "' (normal, random, gates)");
}

int default_epochs(ModelKind kind) {
  if (kind == ModelKind::cv) return 0;
  return is_social(kind) ? kSocialEpochs : kNaiveEpochs;
}

void RunConfig::validate() const {
  check_social_protocol(model, protocol);
  if (!is_scene_name(scene)) throw ConfigError("unknown scene '" + scene + "'");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (model == ModelKind::cv && epochs != 0) throw ConfigError("cv trains zero epochs");
  check_common(lr, batch, lambda, val_fraction);
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw ConfigError("no model selected");
  if (scenes.empty()) throw ConfigError("no scene selected");
  if (seeds.empty()) throw ConfigError("no seed selected");
  for (ModelKind m : models) check_social_protocol(m, protocol);
  for (const std::string& s : scenes) {
    if (!is_scene_name(s)) throw ConfigError("unknown scene '" + s + "'");
  }
  if (epochs && *epochs < 0) throw ConfigError("epochs must be >= 0");
  check_common(lr, batch, lambda, val_fraction);
}

std::vector<RunConfig> ExperimentConfig::expand() const {
  validate();
  std::vector<RunConfig> out;
  for (ModelKind m : models) {
    for (const std::string& scene : scenes) {
      for (std::uint64_t seed : seeds) {
        RunConfig c;
        c.model = m;
        c.protocol = protocol;
        c.scene = scene;
        c.seed = seed;
        c.epochs = m == ModelKind::cv ? 0 : epochs.value_or(default_epochs(m));
        c.lr = lr;
        c.batch = batch;
        c.lambda = lambda;
        c.val_fraction = val_fraction;
        c.augment = augment;
        c.data_dir = data_dir;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

Trainer::Trainer(Model& model, const RunConfig& config, const DataSplit& split)
    : model_(model),
      config_(config),
      split_(split),
      params_(model.trainable()),
      shuffle_rng_(Rng(config.seed).split(kShuffleStream)),
      gate_rng_(Rng(config.seed).split(kGateStream)),
      noise_rng_(Rng(config.seed).split(kNoiseStream)) {
  if (config_.model != ModelKind::cv && split_.train.empty()) {
    throw Error("empty training set for held-out scene '" + split_.plan.held_out + "'");
  }
}

std::vector<TrajectoryWindow> Trainer::prepare(std::span<const TrajectoryWindow* const> windows,
                                               bool augment, bool randomize, Rng& rng,
                                               Rng& noise) {
  std::vector<TrajectoryWindow> out;
  out.reserve(windows.size());
  for (const TrajectoryWindow* w : windows) {
    TrajectoryWindow n = augment
                             ? split_.normalizer.apply(
                                   augment_rotate(*w, rng.uniform(0.0, 2.0 * std::numbers::pi)))
                             : split_.normalizer.apply(*w);
    if (randomize) n.neighbours = gen_random_neighbours(split_.max_neighbours, noise);
    out.push_back(std::move(n));
  }
  return out;
}

double Trainer::train_epoch(bool with_penalty) {
  const auto& train = split_.train;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle_rng_.shuffle(std::span<std::size_t>(order));

  GateSet* gates = model_.gates();
  const bool penalize = with_penalty && gates != nullptr && !gates->frozen();
  const bool randomize = config_.protocol == Protocol::random;

  double total = 0.0;
  std::size_t batches = 0;
  std::vector<const TrajectoryWindow*> chunk;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch) {
    const std::size_t end = std::min(order.size(), begin + config_.batch);
    chunk.clear();
    for (std::size_t i = begin; i < end; ++i) chunk.push_back(&train[order[i]]);
    const auto windows = prepare(chunk, config_.augment, randomize, shuffle_rng_, noise_rng_);
    const Batch batch = make_batch(windows);

    ad::Tape tape;
    ad::Var pred = model_.forward(tape, batch, {GateMode::train, &gate_rng_});
    ad::Var fit = ad::mse(pred, tape.constant(batch.target));
    ad::Var loss = penalize ? ad::add(fit, l0_penalty(tape, *gates, config_.lambda)) : fit;
    if (!std::isfinite(loss.value().item())) {
      throw NumericError("non-finite loss at batch " + std::to_string(batches) +
                         " (held-out " + config_.scene + ", seed " +
                         std::to_string(config_.seed) + ")");
    }
    tape.backward(loss);
    adam_step(params_, adam_, config_.lr);
    zero_grads(params_);
    total += fit.value().item();
    ++batches;
  }
  return batches == 0 ? 0.0 : total / static_cast<double>(batches);
}

double Trainer::validation_loss() {
  const auto& val = split_.val;
  if (val.empty()) return 0.0;
  Rng unused(0);
  Rng noise = Rng(config_.seed).split(kValNoiseStream);
  const bool randomize = config_.protocol == Protocol::random;
  constexpr std::size_t kEvalBatch = 64;
  double total = 0.0;
  std::vector<const TrajectoryWindow*> chunk;
  for (std::size_t begin = 0; begin < val.size(); begin += kEvalBatch) {
    const std::size_t end = std::min(val.size(), begin + kEvalBatch);
    chunk.clear();
    for (std::size_t i = begin; i < end; ++i) chunk.push_back(&val[i]);
    const auto windows = prepare(chunk, false, randomize, unused, noise);
    const Batch batch = make_batch(windows);
    ad::Tape tape;
    ad::Var pred = model_.forward(tape, batch, {GateMode::eval, nullptr});
    total += ad::mse(pred, tape.constant(batch.target)).value().item() *
             static_cast<double>(end - begin);
  }
  return total / static_cast<double>(val.size());
}

TestMetrics evaluate_model(Model& model, std::span<const TrajectoryWindow> windows,
                           const Normalizer& norm, std::size_t batch_size) {
  TestMetrics m;
  if (windows.empty()) return m;
  double sum_ade = 0.0, sum_fde = 0.0;
  std::vector<TrajectoryWindow> normalized;
  for (std::size_t begin = 0; begin < windows.size(); begin += batch_size) {
    const std::size_t end = std::min(windows.size(), begin + batch_size);
    normalized.clear();
    for (std::size_t i = begin; i < end; ++i) normalized.push_back(norm.apply(windows[i]));
    const Batch batch = make_batch(normalized);
    ad::Tape tape;
    const Tensor& pred = model.forward(tape, batch, {GateMode::eval, nullptr}).value();
    for (std::size_t b = 0; b < batch.size; ++b) {
      const auto predicted = prediction_row(pred, b, norm);
      sum_ade += ade(predicted, windows[begin + b].future);
      sum_fde += fde(predicted, windows[begin + b].future);
    }
  }
  m.windows = windows.size();
  m.ade = sum_ade / static_cast<double>(m.windows);
  m.fde = sum_fde / static_cast<double>(m.windows);
  return m;
}

TestMetrics Trainer::evaluate(std::span<const TrajectoryWindow> windows) {
  return evaluate_model(model_, windows, split_.normalizer);
}

bool has_plateaued(std::span<const double> val_losses, int patience) {
  const std::size_t p = static_cast<std::size_t>(std::max(patience, 1));
  if (val_losses.size() <= p) return false;
  const auto split = val_losses.end() - static_cast<std::ptrdiff_t>(p);
  const double before = *std::min_element(val_losses.begin(), split);
  const double recent = *std::min_element(split, val_losses.end());
  return recent > before * (1.0 - 0.01);
}

RunRecord Trainer::run(const Logger& log) {
  RunRecord rec;
  rec.config = config_;
  rec.train_windows = split_.train.size();
  rec.val_windows = split_.val.size();
  rec.test_windows = split_.test.size();
  rec.max_neighbours = split_.max_neighbours;

  const std::string tag = std::string(to_string(config_.model)) + "/" +
                          std::string(to_string(config_.protocol)) + "/" + config_.scene +
                          "/seed" + std::to_string(config_.seed);
  GateSet* gates = model_.gates();
  if (gates) gates->set_frozen(true);

  std::vector<double> val_curve;
  for (int e = 1; e <= config_.epochs; ++e) {
    const double tl = train_epoch(false);
    const double vl = validation_loss();
    rec.epochs.push_back({e, "train", tl, vl});
    val_curve.push_back(vl);
    say(log, tag + " epoch " + std::to_string(e) + " train " + fmt(tl, 6) + " val " + fmt(vl, 6));
  }

  if (config_.protocol == Protocol::gates && gates) {
    if (!has_plateaued(val_curve)) {
      rec.warnings.push_back("pre-training validation loss had not plateaued after " +
                             std::to_string(config_.epochs) + " epochs (patience " +
                             std::to_string(kPlateauPatience) + ")");
    }
    const TestMetrics pre = evaluate(split_.test);
    rec.pre_finetune_ade = pre.ade;
    rec.pre_finetune_fde = pre.fde;
    gates->set_frozen(false);
    for (int e = 1; e <= config_.epochs; ++e) {
      const double tl = train_epoch(true);
      const double vl = validation_loss();
      rec.epochs.push_back({config_.epochs + e, "finetune", tl, vl});
      GateTracePoint pt{e, gates->trajectory.deterministic_value(),
                        gates->attention.deterministic_value()};
      rec.gate_trace.push_back(pt);
      say(log, tag + " finetune " + std::to_string(e) + " train " + fmt(tl, 6) + " g_tau " +
                   fmt(pt.gate_tau) + " g_a " + fmt(pt.gate_a));
    }
  }

  const TestMetrics final_metrics = evaluate(split_.test);
  rec.test_ade = final_metrics.ade;
  rec.test_fde = final_metrics.fde;
  say(log, tag + " test ADE " + fmt(rec.test_ade) + " FDE " + fmt(rec.test_fde));
  return rec;
}

RunRecord run_single(const RunConfig& config, std::span<const Scene> scenes, const Logger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config;
  try {
    config.validate();
    Rng split_rng = Rng(config.seed).split(kSplitStream);
    const DataSplit split = make_splits(scenes, config.scene, config.val_fraction, split_rng);
    for (const auto* part : {&split.train, &split.val}) {
      for (const TrajectoryWindow& w : *part) {
        if (w.scene == config.scene) {
          throw Error("held-out scene '" + config.scene + "' leaked into training data");
        }
      }
    }
    Rng init_rng = Rng(config.seed).split(kInitStream);
    std::unique_ptr<Model> model = make_model(config.model, init_rng);
    Trainer trainer(*model, config, split);
    rec = trainer.run(log);
  } catch (const std::exception& e) {
    rec.status = "failed";
    rec.error = e.what();
    say(log, run_file_stem(config) + " failed: " + e.what());
  }
  rec.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// ---------------------------------------------------------------------------
// Benchmark orchestration and artifacts

namespace {

std::vector<MetricsReport> write_reports(std::span<const RunRecord> runs,
                                         const std::filesystem::path& out_dir,
                                         std::vector<std::string>& warnings) {
  // (protocol, model) -> scene order preserved from kSceneNames.
  std::map<std::pair<Protocol, ModelKind>, std::vector<RunMetrics>> groups;
  std::map<std::pair<Protocol, ModelKind>, std::set<std::string>> scenes_seen;
  std::map<std::pair<Protocol, ModelKind>, std::size_t> failed;
  for (const RunRecord& r : runs) {
    const auto key = std::make_pair(r.config.protocol, r.config.model);
    scenes_seen[key].insert(r.config.scene);
    if (!r.ok()) {
      ++failed[key];
      groups[key];
      continue;
    }
    groups[key].push_back({r.config.scene, r.config.seed, r.test_ade, r.test_fde});
  }

  std::vector<MetricsReport> reports;
  std::map<Protocol, std::vector<MetricsReport>> by_protocol;
  for (auto& [key, metrics] : groups) {
    const std::string model(to_string(key.second));
    const std::string protocol(to_string(key.first));
    if (failed[key] > 0) {
      warnings.push_back(model + "/" + protocol + ": " + std::to_string(failed[key]) +
                         " failed run(s) excluded from aggregation");
    }
    std::vector<std::string> scenes;
    for (std::string_view s : kSceneNames) {
      if (scenes_seen[key].count(std::string(s))) scenes.emplace_back(s);
    }
    try {
      MetricsReport rep = aggregate(metrics, model, protocol, scenes);
      write_report(rep, out_dir);
      by_protocol[key.first].push_back(rep);
      reports.push_back(std::move(rep));
    } catch (const Error& e) {
      warnings.push_back(e.what());
    }
  }
  for (auto& [protocol, reps] : by_protocol) {
    // Table column order follows kAllModelKinds.
    std::stable_sort(reps.begin(), reps.end(), [](const MetricsReport& a, const MetricsReport& b) {
      auto rank = [](const std::string& m) {
        const ModelKind k = parse_model_kind(m);
        return std::find(kAllModelKinds.begin(), kAllModelKinds.end(), k) - kAllModelKinds.begin();
      };
      return rank(a.model) < rank(b.model);
    });
    write_file(out_dir / ("table_" + std::string(to_string(protocol)) + ".csv"), table_csv(reps));
  }
  return reports;
}

void write_run_records(std::span<const RunRecord> runs, const std::filesystem::path& out_dir) {
  for (const RunRecord& r : runs) {
    write_file(out_dir / "runs" / (run_file_stem(r.config) + ".json"), to_json(r) + "\n");
  }
}

}  // namespace

BenchmarkSummary run_benchmark(const ExperimentConfig& config, const Logger& log) {
  const std::vector<RunConfig> plan = config.expand();
  std::vector<std::string> all_scenes(kSceneNames.begin(), kSceneNames.end());
  const std::vector<Scene> scenes = load_scenes(config.data_dir, all_scenes);

  BenchmarkSummary summary;
  summary.runs.resize(plan.size());

  std::mutex log_mutex;
  Logger safe_log = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(msg);
  };

  std::size_t jobs = config.jobs == 0 ? std::thread::hardware_concurrency() : config.jobs;
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(plan.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      summary.runs[i] = run_single(plan[i], scenes, safe_log);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::filesystem::create_directories(config.out_dir);
  write_file(config.out_dir / "config.json", to_json(config) + "\n");
  write_run_records(summary.runs, config.out_dir);
  summary.reports = write_reports(summary.runs, config.out_dir, summary.warnings);
  if (config.protocol == Protocol::gates) emit_plots(summary.runs, config.out_dir);
  for (const RunRecord& r : summary.runs) {
    for (const std::string& w : r.warnings) summary.warnings.push_back(run_file_stem(r.config) + ": " + w);
  }
  return summary;
}

std::vector<std::filesystem::path> emit_plots(std::span<const RunRecord> runs,
                                              const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  std::string combined = "model,scene,seed,epoch,gate_tau,gate_a\n";
  for (const RunRecord& r : runs) {
    if (r.gate_trace.empty()) continue;
    std::string csv = "epoch,gate_tau,gate_a\n";
    for (const GateTracePoint& p : r.gate_trace) {
      const std::string row =
          std::to_string(p.epoch) + "," + fmt(p.gate_tau, 6) + "," + fmt(p.gate_a, 6) + "\n";
      csv += row;
      combined += std::string(to_string(r.config.model)) + "," + r.config.scene + "," +
                  std::to_string(r.config.seed) + "," + row;
    }
    const auto path = out_dir / "traces" /
                      (std::string(to_string(r.config.model)) + "_" + r.config.scene + "_seed" +
                       std::to_string(r.config.seed) + "_gates.csv");
    write_file(path, csv);
    written.push_back(path);
  }
  const auto combined_path = out_dir / "gate_traces_long.csv";
  write_file(combined_path, combined);
  written.push_back(combined_path);
  return written;
}

BenchmarkSummary regenerate_reports(const std::filesystem::path& out_dir) {
  const auto runs_dir = out_dir / "runs";
  if (!std::filesystem::is_directory(runs_dir)) {
    throw IoError("no run records in " + runs_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no run records in " + runs_dir.string());

  BenchmarkSummary summary;
  for (const auto& f : files) {
    try {
      summary.runs.push_back(run_record_from_json(read_file(f)));
    } catch (const std::exception& e) {
      throw ParseError(f.string() + ": " + e.what());
    }
  }
  summary.reports = write_reports(summary.runs, out_dir, summary.warnings);
  const bool any_trace = std::any_of(summary.runs.begin(), summary.runs.end(),
                                     [](const RunRecord& r) { return !r.gate_trace.empty(); });
  if (any_trace) emit_plots(summary.runs, out_dir);
  return summary;
}

// ---------------------------------------------------------------------------
// Serialization

std::string run_file_stem(const RunConfig& c) {
  return std::string(to_string(c.model)) + "_" + std::string(to_string(c.protocol)) + "_" +
         c.scene + "_seed" + std::to_string(c.seed);
}

namespace {

json config_json(const RunConfig& c) {
  return json{{"model", std::string(to_string(c.model))},
              {"protocol", std::string(to_string(c.protocol))},
              {"scene", c.scene},
              {"seed", c.seed},
              {"epochs", c.epochs},
              {"lr", c.lr},
              {"batch", c.batch},
              {"lambda", c.lambda},
              {"val_fraction", c.val_fraction},
              {"augment", c.augment},
              {"data_dir", c.data_dir.string()}};
}

RunConfig config_from(const json& j) {
  RunConfig c;
  c.model = parse_model_kind(j.at("model").get<std::string>());
  c.protocol = parse_protocol(j.at("protocol").get<std::string>());
  c.scene = j.at("scene").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch = j.at("batch").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.val_fraction = j.at("val_fraction").get<double>();
  c.augment = j.value("augment", true);
  c.data_dir = j.value("data_dir", std::string("data"));
  return c;
}

}  // namespace

std::string to_json(const RunConfig& c) { return config_json(c).dump(2); }

RunConfig run_config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

std::string to_json(const RunRecord& r) {
  json j;
  j["config"] = config_json(r.config);
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  j["duration_s"] = r.duration_s;
  j["windows"] = {{"train", r.train_windows},
                  {"val", r.val_windows},
                  {"test", r.test_windows},
                  {"max_neighbours", r.max_neighbours}};
  j["test"] = {{"ade", r.test_ade}, {"fde", r.test_fde}};
  if (r.pre_finetune_ade) {
    j["pre_finetune"] = {{"ade", *r.pre_finetune_ade}, {"fde", r.pre_finetune_fde.value_or(0.0)}};
  }
  json epochs = json::array();
  for (const EpochLog& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"phase", e.phase},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss}});
  }
  j["epochs"] = std::move(epochs);
  if (!r.gate_trace.empty()) {
    json trace = json::array();
    for (const GateTracePoint& p : r.gate_trace) {
      trace.push_back({{"epoch", p.epoch}, {"gate_tau", p.gate_tau}, {"gate_a", p.gate_a}});
    }
    j["gate_trace"] = std::move(trace);
  }
  j["warnings"] = r.warnings;
  return j.dump(2);
}

RunRecord run_record_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunRecord r;
    r.config = config_from(j.at("config"));
    r.status = j.at("status").get<std::string>();
    r.error = j.value("error", std::string());
    r.duration_s = j.value("duration_s", 0.0);
    if (j.contains("windows")) {
      const json& w = j["windows"];
      r.train_windows = w.value("train", std::size_t{0});
      r.val_windows = w.value("val", std::size_t{0});
      r.test_windows = w.value("test", std::size_t{0});
      r.max_neighbours = w.value("max_neighbours", std::size_t{0});
    }
    r.test_ade = j.at("test").at("ade").get<double>();
    r.test_fde = j.at("test").at("fde").get<double>();
    if (j.contains("pre_finetune")) {
      r.pre_finetune_ade = j["pre_finetune"].at("ade").get<double>();
      r.pre_finetune_fde = j["pre_finetune"].at("fde").get<double>();
    }
    for (const json& e : j.at("epochs")) {
      r.epochs.push_back({e.at("epoch").get<int>(), e.at("phase").get<std::string>(),
                          e.at("train_loss").get<double>(), e.at("val_loss").get<double>()});
    }
    if (j.contains("gate_trace")) {
      for (const json& p : j["gate_trace"]) {
        r.gate_trace.push_back({p.at("epoch").get<int>(), p.at("gate_tau").get<double>(),
                                p.at("gate_a").get<double>()});
      }
    }
    if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("run record: ") + e.what());
  }
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
      throw ConfigError("bad seed '" + std::string(s) + "' in '" + std::string(text) + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t lo = number(text.substr(0, dots));
    const std::uint64_t hi = number(text.substr(dots + 2));
    if (hi < lo) throw ConfigError("empty seed range '" + std::string(text) + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t stop = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(number(text.substr(start, stop - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string to_json(const ExperimentConfig& c) {
  json models = json::array();
  for (ModelKind m : c.models) models.push_back(std::string(to_string(m)));
  json j{{"models", models},
         {"protocol", std::string(to_string(c.protocol))},
         {"scenes", c.scenes},
         {"seeds", c.seeds},
         {"data_dir", c.data_dir.string()},
         {"out_dir", c.out_dir.string()}};
  if (c.epochs) j["epochs"] = *c.epochs;
  j["lr"] = c.lr;
  j["batch"] = c.batch;
  j["lambda"] = c.lambda;
  j["val_fraction"] = c.val_fraction;
  j["augment"] = c.augment;
  j["jobs"] = c.jobs;
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  auto names = [](const json& v) {
    std::vector<std::string> out;
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else {
      for (const json& x : v) out.push_back(x.get<std::string>());
    }
    return out;
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "models" || key == "model") {
        c.models.clear();
        for (const std::string& m : names(v)) {
          if (m == "all") {
            c.models.assign(kAllModelKinds.begin(), kAllModelKinds.end());
          } else {
            c.models.push_back(parse_model_kind(m));
          }
        }
      } else if (key == "protocol") {
        c.protocol = parse_protocol(v.get<std::string>());
      } else if (key == "scenes" || key == "scene") {
        c.scenes = names(v);
        if (c.scenes.size() == 1 && c.scenes[0] == "all") {
          c.scenes.assign(kSceneNames.begin(), kSceneNames.end());
        }
      } else if (key == "seeds" || key == "seed") {
        if (v.is_string()) {
          c.seeds = parse_seed_list(v.get<std::string>());
        } else if (v.is_number_unsigned()) {
          c.seeds = {v.get<std::uint64_t>()};
        } else {
          c.seeds = v.get<std::vector<std::uint64_t>>();
        }
      } else if (key == "data_dir" || key == "data") {
        c.data_dir = v.get<std::string>();
      } else if (key == "out_dir" || key == "out") {
        c.out_dir = v.get<std::string>();
      } else if (key == "epochs") {
        c.epochs = v.get<int>();
      } else if (key == "lr") {
        c.lr = v.get<double>();
      } else if (key == "batch") {
        c.batch = v.get<std::size_t>();
      } else if (key == "lambda") {
        c.lambda = v.get<double>();
      } else if (key == "val_fraction") {
        c.val_fraction = v.get<double>();
      } else if (key == "augment") {
        c.augment = v.get<bool>();
      } else if (key == "jobs") {
        c.jobs = v.get<std::size_t>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

}  // namespace socialprobe
