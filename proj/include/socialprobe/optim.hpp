// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "socialprobe/autodiff.hpp"

namespace socialprobe {

/// Moment accumulators for Adam. Sized lazily on the first step.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  // Updates applied to each parameter; a parameter unfrozen later starts its
  // own bias correction from 1.
  std::vector<std::uint64_t> param_steps;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One Adam update with bias correction. Reads each parameter's `grad`;
/// frozen parameters keep their value and moments. Throws ShapeError if the
/// state was built for a different parameter list.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

void zero_grads(std::span<Parameter* const> params);

}  // namespace socialprobe
