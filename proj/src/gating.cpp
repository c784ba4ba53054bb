// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/gating.hpp"

#include <algorithm>
#include <cmath>

#include "socialprobe/error.hpp"

namespace socialprobe {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

HardConcreteGate::HardConcreteGate(std::string name, double log_alpha, HardConcreteParams params)
    : log_alpha_(std::move(name), Tensor::scalar(log_alpha)), params_(params) {
  if (!(params_.beta > 0.0) || !(params_.gamma < 0.0) || !(params_.zeta > 1.0)) {
    throw ConfigError("hard-concrete gate needs beta > 0, gamma < 0, zeta > 1");
  }
}

double HardConcreteGate::prob_nonzero() const {
  return sigmoid(log_alpha() - params_.beta * std::log(-params_.gamma / params_.zeta));
}

double HardConcreteGate::deterministic_value() const {
  const double s = sigmoid(log_alpha());
  return std::clamp(s * (params_.zeta - params_.gamma) + params_.gamma, 0.0, 1.0);
}

double HardConcreteGate::value_for_noise(double u) const {
  const double s = sigmoid((std::log(u) - std::log1p(-u) + log_alpha()) / params_.beta);
  return std::clamp(s * (params_.zeta - params_.gamma) + params_.gamma, 0.0, 1.0);
}

ad::Var HardConcreteGate::sample(ad::Tape& tape, Rng& rng) {
  if (frozen()) return deterministic(tape);
  double u = 0.0;
  do {
    u = rng.uniform();
  } while (u <= 0.0 || u >= 1.0);
  return sample_with_noise(tape, u);
}

ad::Var HardConcreteGate::sample_with_noise(ad::Tape& tape, double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error("hard-concrete noise must lie in (0, 1)");
  const double logit_u = std::log(u) - std::log1p(-u);
  ad::Var la = tape.parameter(log_alpha_);
  ad::Var s = ad::sigmoid(ad::scale(ad::add_scalar(la, logit_u), 1.0 / params_.beta));
  ad::Var stretched = ad::add_scalar(ad::scale(s, params_.zeta - params_.gamma), params_.gamma);
  return ad::clamp(stretched, 0.0, 1.0);
}

ad::Var HardConcreteGate::deterministic(ad::Tape& tape) {
  if (frozen()) return tape.scalar(deterministic_value());
  ad::Var s = ad::sigmoid(tape.parameter(log_alpha_));
  ad::Var stretched = ad::add_scalar(ad::scale(s, params_.zeta - params_.gamma), params_.gamma);
  return ad::clamp(stretched, 0.0, 1.0);
}

ad::Var HardConcreteGate::prob_nonzero(ad::Tape& tape) {
  const double shift = params_.beta * std::log(-params_.gamma / params_.zeta);
  return ad::sigmoid(ad::add_scalar(tape.parameter(log_alpha_), -shift));
}

double l0_penalty(const GateSet& gates, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("L0 strength must be non-negative");
  return lambda * (gates.trajectory.prob_nonzero() + gates.attention.prob_nonzero());
}

ad::Var l0_penalty(ad::Tape& tape, GateSet& gates, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("L0 strength must be non-negative");
  ad::Var sum = ad::add(gates.trajectory.prob_nonzero(tape), gates.attention.prob_nonzero(tape));
  return ad::scale(sum, lambda);
}

int discrete_l0(double trajectory_value, double attention_value) {
  return (trajectory_value != 0.0 ? 1 : 0) + (attention_value != 0.0 ? 1 : 0);
}

std::pair<ad::Var, ad::Var> apply_gates(ad::Tape& tape, ad::Var trajectory, ad::Var attention,
                                        GateSet& gates, GateMode mode, Rng* rng) {
  auto gate_value = [&](HardConcreteGate& g) {
    if (mode == GateMode::train && !g.frozen()) {
      if (rng == nullptr) throw Error("apply_gates: training mode needs an RNG");
      return g.sample(tape, *rng);
    }
    return g.deterministic(tape);
  };
  ad::Var g_tau = gate_value(gates.trajectory);
  ad::Var g_a = gate_value(gates.attention);
  return {ad::mul_scalar(trajectory, g_tau), ad::mul_scalar(attention, g_a)};
}

}  // namespace socialprobe
