// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socialprobe/data.hpp"
#include "socialprobe/models.hpp"

namespace socialprobe {

struct SelfCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;  // the measured quantity (error, sum, probability)
  std::string detail;
};

struct SelftestReport {
  std::vector<SelfCheck> checks;

  bool ok() const;
  void append(const SelftestReport& other);
};

/// A small window in normalized units: a random walk for the main pedestrian
/// and up to `max_neighbours` neighbours with some missing early steps.
TrajectoryWindow random_window(Rng& rng, std::size_t max_neighbours = 3);

/// Largest relative error between the tape gradient of
/// mse(forward(batch), target) + L0 penalty and central differences, over
/// `entries` sampled coordinates per parameter tensor. Gate logits are
/// included when the model has gates; they are unfrozen for the check.
double max_gradient_error(Model& model, const Batch& batch, std::uint64_t noise_seed,
                          std::size_t entries, Rng& pick);

/// Central-difference gradient check of every learnable model kind on
/// `windows` single-window batches. Passes below a relative error of 1e-4.
SelftestReport run_gradient_checks(std::uint64_t seed = 0, std::size_t windows = 20);
/// Attention weights of every social model sum to 1 within 1e-9 per row with
/// neighbours and to 0 for rows without.
SelftestReport run_attention_checks(std::uint64_t seed = 0);
/// Monte-Carlo zero probability of the gate versus the closed form, and the
/// penalty maximum.
SelftestReport run_gate_checks(std::uint64_t seed = 0, std::size_t samples = 1'000'000);
/// ADE/FDE against a naive loop on random pairs, plus the hand cases.
SelftestReport run_metric_oracle(std::uint64_t seed = 0, std::size_t pairs = 10'000);

SelftestReport run_selftest(std::uint64_t seed = 0);

}  // namespace socialprobe
