// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/socialprobe.h"

#include <charconv>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "socialprobe/error.hpp"
#include "socialprobe/gating.hpp"
#include "socialprobe/harness.hpp"
#include "socialprobe/metrics.hpp"
#include "socialprobe/selftest.hpp"

struct sp_config {
  socialprobe::ExperimentConfig config;
};

struct sp_scene {
  socialprobe::Scene scene;
  std::size_t windows = 0;
};

namespace {

using namespace socialprobe;

thread_local std::string g_last_error;

sp_status fail(sp_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
sp_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const ConfigError& e) {
    return fail(SP_ERR_CONFIG, e.what());
  } catch (const IoError& e) {
    return fail(SP_ERR_IO, e.what());
  } catch (const ParseError& e) {
    return fail(SP_ERR_PARSE, e.what());
  } catch (const ShapeError& e) {
    return fail(SP_ERR_SHAPE, e.what());
  } catch (const NumericError& e) {
    return fail(SP_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(SP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SP_ERR_INTERNAL, "unknown exception");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "model" || key == "models") {
    c.models.clear();
    for (const std::string& m : split_list(v)) {
      if (m == "all") {
        c.models.assign(kAllModelKinds.begin(), kAllModelKinds.end());
      } else {
        c.models.push_back(parse_model_kind(m));
      }
    }
    if (c.models.empty()) throw ConfigError("model: empty list");
  } else if (key == "protocol") {
    c.protocol = parse_protocol(v);
  } else if (key == "scene" || key == "scenes") {
    c.scenes = v == "all" ? std::vector<std::string>(kSceneNames.begin(), kSceneNames.end())
                          : split_list(v);
    for (const std::string& s : c.scenes) {
      if (!is_scene_name(s)) throw ConfigError("unknown scene '" + s + "'");
    }
  } else if (key == "seeds" || key == "seed") {
    c.seeds = parse_seed_list(v);
  } else if (key == "data_dir" || key == "data") {
    c.data_dir = v;
  } else if (key == "out_dir" || key == "out") {
    c.out_dir = v;
  } else if (key == "epochs") {
    const long long e = parse_int(key, v);
    if (e < 0) throw ConfigError("epochs must be >= 0");
    c.epochs = static_cast<int>(e);
  } else if (key == "lr") {
    c.lr = parse_double(key, v);
  } else if (key == "batch") {
    const long long b = parse_int(key, v);
    if (b <= 0) throw ConfigError("batch must be positive");
    c.batch = static_cast<std::size_t>(b);
  } else if (key == "lambda") {
    c.lambda = parse_double(key, v);
  } else if (key == "val_fraction") {
    c.val_fraction = parse_double(key, v);
  } else if (key == "augment") {
    if (v == "1" || v == "true") {
      c.augment = true;
    } else if (v == "0" || v == "false") {
      c.augment = false;
    } else {
      throw ConfigError("augment: expected true/false, got '" + v + "'");
    }
  } else if (key == "jobs") {
    const long long j = parse_int(key, v);
    if (j < 0) throw ConfigError("jobs must be >= 0");
    c.jobs = static_cast<std::size_t>(j);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::vector<Vec2> to_points(const double* xy, std::size_t n) {
  std::vector<Vec2> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {xy[2 * i], xy[2 * i + 1]};
  return out;
}

}  // namespace

extern "C" {

const char* sp_last_error(void) { return g_last_error.c_str(); }

const char* sp_version(void) { return "1.0.0"; }

sp_status sp_config_create(sp_config** out) {
  if (!out) return fail(SP_ERR_INVALID_ARGUMENT, "sp_config_create: null output");
  return guarded([&] {
    *out = new sp_config{};
    return SP_OK;
  });
}

sp_status sp_config_set(sp_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(SP_ERR_INVALID_ARGUMENT, "sp_config_set: null argument");
  return guarded([&] {
    apply_setting(cfg->config, key, value);
    return SP_OK;
  });
}

sp_status sp_config_load_json(sp_config* cfg, const char* path) {
  if (!cfg || !path) return fail(SP_ERR_INVALID_ARGUMENT, "sp_config_load_json: null argument");
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open config ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg->config = experiment_config_from_json(ss.str(), cfg->config);
    return SP_OK;
  });
}

sp_status sp_config_to_json(const sp_config* cfg, char* buf, size_t size, size_t* needed) {
  if (!cfg) return fail(SP_ERR_INVALID_ARGUMENT, "sp_config_to_json: null config");
  return guarded([&] {
    const std::string text = to_json(cfg->config);
    if (needed) *needed = text.size() + 1;
    if (buf) {
      if (size < text.size() + 1) {
        return fail(SP_ERR_INVALID_ARGUMENT, "sp_config_to_json: buffer too small");
      }
      std::memcpy(buf, text.c_str(), text.size() + 1);
    }
    return SP_OK;
  });
}

void sp_config_destroy(sp_config* cfg) { delete cfg; }

sp_status sp_run(const sp_config* cfg, int verbose) {
  if (!cfg) return fail(SP_ERR_INVALID_ARGUMENT, "sp_run: null config");
  return guarded([&] {
    Logger log;
    if (verbose) log = [](const std::string& m) { std::cerr << m << "\n"; };
    const BenchmarkSummary summary = run_benchmark(cfg->config, log);
    for (const std::string& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    std::string failures;
    std::size_t failed = 0;
    for (const RunRecord& r : summary.runs) {
      if (r.ok()) continue;
      ++failed;
      if (failures.empty()) failures = run_file_stem(r.config) + ": " + r.error;
    }
    if (failed > 0) {
      return fail(SP_ERR_RUN_FAILED,
                  std::to_string(failed) + " of " + std::to_string(summary.runs.size()) +
                      " run(s) failed; first: " + failures);
    }
    return SP_OK;
  });
}

sp_status sp_report(const char* out_dir) {
  if (!out_dir) return fail(SP_ERR_INVALID_ARGUMENT, "sp_report: null directory");
  return guarded([&] {
    const BenchmarkSummary summary = regenerate_reports(out_dir);
    for (const std::string& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    if (summary.reports.empty()) {
      return fail(SP_ERR_RUN_FAILED, "no report could be aggregated");
    }
    return SP_OK;
  });
}

sp_status sp_selftest(uint64_t seed, int verbose, int* passed) {
  if (!passed) return fail(SP_ERR_INVALID_ARGUMENT, "sp_selftest: null output");
  return guarded([&] {
    const SelftestReport report = run_selftest(seed);
    if (verbose) {
      for (const SelfCheck& c : report.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      }
    }
    *passed = report.ok() ? 1 : 0;
    return SP_OK;
  });
}

sp_status sp_scene_load(const char* path, sp_scene** out) {
  if (!path || !out) return fail(SP_ERR_INVALID_ARGUMENT, "sp_scene_load: null argument");
  return guarded([&] {
    auto handle = std::make_unique<sp_scene>();
    handle->scene = load_scene(path);
    handle->windows = extract_windows(handle->scene).size();
    *out = handle.release();
    return SP_OK;
  });
}

sp_status sp_scene_counts(const sp_scene* scene, size_t* pedestrians, size_t* records,
                          size_t* windows) {
  if (!scene) return fail(SP_ERR_INVALID_ARGUMENT, "sp_scene_counts: null scene");
  if (pedestrians) *pedestrians = scene->scene.pedestrian_count();
  if (records) *records = scene->scene.record_count();
  if (windows) *windows = scene->windows;
  return SP_OK;
}

void sp_scene_destroy(sp_scene* scene) { delete scene; }

sp_status sp_ade(const double* predicted_xy, const double* truth_xy, size_t n, double* out) {
  if (!predicted_xy || !truth_xy || !out) return fail(SP_ERR_INVALID_ARGUMENT, "sp_ade: null argument");
  return guarded([&] {
    *out = ade(to_points(predicted_xy, n), to_points(truth_xy, n));
    return SP_OK;
  });
}

sp_status sp_fde(const double* predicted_xy, const double* truth_xy, size_t n, double* out) {
  if (!predicted_xy || !truth_xy || !out) return fail(SP_ERR_INVALID_ARGUMENT, "sp_fde: null argument");
  return guarded([&] {
    *out = fde(to_points(predicted_xy, n), to_points(truth_xy, n));
    return SP_OK;
  });
}

sp_status sp_gate_prob_nonzero(double log_alpha, double* out) {
  if (!out) return fail(SP_ERR_INVALID_ARGUMENT, "sp_gate_prob_nonzero: null output");
  return guarded([&] {
    *out = HardConcreteGate("c_api", log_alpha).prob_nonzero();
    return SP_OK;
  });
}

sp_status sp_gate_deterministic(double log_alpha, double* out) {
  if (!out) return fail(SP_ERR_INVALID_ARGUMENT, "sp_gate_deterministic: null output");
  return guarded([&] {
    *out = HardConcreteGate("c_api", log_alpha).deterministic_value();
    return SP_OK;
  });
}

}  // extern "C"
