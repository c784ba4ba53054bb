// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

// socialprobe: train and evaluate trajectory predictors on ETH/UCY under the
// normal, random-neighbour and gating protocols.

#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "socialprobe/socialprobe.h"

namespace {

int report_failure(const char* what, sp_status status) {
  std::fprintf(stderr, "socialprobe %s: error %d: %s\n", what, static_cast<int>(status),
               sp_last_error());
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory prediction benchmark harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Train and evaluate a benchmark matrix");
  std::string config_path;
  std::string model, protocol, scene, seeds, data, out, epochs, lr, batch, lambda, val_fraction,
      jobs;
  bool no_augment = false;
  bool quiet = false;
  run->add_option("--config", config_path, "JSON file with ExperimentConfig fields")
      ->check(CLI::ExistingFile);
  run->add_option("--model", model, "Model kind(s), comma separated, or 'all'");
  run->add_option("--protocol", protocol, "normal | random | gates");
  run->add_option("--scene", scene, "Held-out scene(s), comma separated, or 'all'");
  run->add_option("--seeds", seeds, "Seed range '0..4' or list '0,1,2'");
  run->add_option("--data", data, "Directory holding <scene>.txt files");
  run->add_option("--out", out, "Output directory");
  run->add_option("--epochs", epochs, "Epochs (pre-training and fine-tuning each)");
  run->add_option("--lr", lr, "Adam learning rate");
  run->add_option("--batch", batch, "Batch size");
  run->add_option("--lambda", lambda, "L0 penalty strength");
  run->add_option("--val-fraction", val_fraction, "Validation fraction of training windows");
  run->add_option("--jobs", jobs, "Parallel runs (0: all cores)");
  run->add_flag("--no-augment", no_augment, "Disable rotation augmentation");
  run->add_flag("-q,--quiet", quiet, "Only print warnings and errors");

  // report
  auto* report = app.add_subcommand("report", "Regenerate tables and plot data from run records");
  std::string report_dir = "out";
  report->add_option("--out", report_dir, "Output directory of a previous run")->required();

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Gradient checks and metric oracle");
  std::uint64_t selftest_seed = 0;
  selftest->add_option("--seed", selftest_seed, "Seed for the random probes");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    sp_config* cfg = nullptr;
    if (sp_status s = sp_config_create(&cfg); s != SP_OK) return report_failure("run", s);
    if (!config_path.empty()) {
      if (sp_status s = sp_config_load_json(cfg, config_path.c_str()); s != SP_OK) {
        sp_config_destroy(cfg);
        return report_failure("run", s);
      }
    }
    const std::pair<const char*, const std::string*> overrides[] = {
        {"model", &model},   {"protocol", &protocol}, {"scene", &scene},
        {"seeds", &seeds},   {"data_dir", &data},     {"out_dir", &out},
        {"epochs", &epochs}, {"lr", &lr},             {"batch", &batch},
        {"lambda", &lambda}, {"val_fraction", &val_fraction}, {"jobs", &jobs}};
    for (const auto& [key, value] : overrides) {
      if (value->empty()) continue;
      if (sp_status s = sp_config_set(cfg, key, value->c_str()); s != SP_OK) {
        sp_config_destroy(cfg);
        return report_failure("run", s);
      }
    }
    if (no_augment) sp_config_set(cfg, "augment", "false");
    const sp_status s = sp_run(cfg, quiet ? 0 : 1);
    sp_config_destroy(cfg);
    if (s != SP_OK) return report_failure("run", s);
    return 0;
  }

  if (*report) {
    if (sp_status s = sp_report(report_dir.c_str()); s != SP_OK) return report_failure("report", s);
    return 0;
  }

  if (*selftest) {
    int passed = 0;
    if (sp_status s = sp_selftest(selftest_seed, 1, &passed); s != SP_OK) {
      return report_failure("selftest", s);
    }
    std::printf("%s\n", passed ? "selftest passed" : "selftest FAILED");
    return passed ? 0 : 1;
  }
  return 0;
}
