// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/optim.hpp"

#include <cmath>

#include "socialprobe/error.hpp"

namespace socialprobe {

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape(), std::vector<double>(p->value.size(), 0.0));
      state.second_moment.emplace_back(p->value.shape(), std::vector<double>(p->value.size(), 0.0));
    }
    state.param_steps.assign(params.size(), 0);
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (!state.first_moment[i].same_shape(p.value) || !p.grad.same_shape(p.value)) {
      throw ShapeError("adam_step: shape mismatch for parameter '" + p.name + "' " +
                       p.value.shape_string() + " vs state " +
                       state.first_moment[i].shape_string());
    }
  }

  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (p.frozen) continue;
    const double t = static_cast<double>(++state.param_steps[i]);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p.value[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace socialprobe
