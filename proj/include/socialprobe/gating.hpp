// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Hard-Concrete gates on the trajectory and social module outputs, with the
// expected-L0 penalty used to let a model switch either module off.
//
// A gate with location log_alpha, temperature beta and stretch (gamma, zeta):
//   s = sigmoid((log u - log(1-u) + log_alpha) / beta),   u ~ U(0,1)
//   g = clamp(s * (zeta - gamma) + gamma, 0, 1)
//   P(g != 0) = sigmoid(log_alpha - beta * log(-gamma / zeta))
//   deterministic value: clamp(sigmoid(log_alpha) * (zeta - gamma) + gamma, 0, 1)

#include <string>
#include <utility>

#include "socialprobe/autodiff.hpp"
#include "socialprobe/rng.hpp"

namespace socialprobe {

struct HardConcreteParams {
  double beta = 0.5;
  double gamma = -0.1;
  double zeta = 1.1;
};

/// log_alpha = 2.5 puts the deterministic value above 1 before clamping,
/// so a fresh gate evaluates to exactly 1.
inline constexpr double kGateInitLogAlpha = 2.5;
inline constexpr double kDefaultL0Lambda = 0.005;

class HardConcreteGate {
 public:
  explicit HardConcreteGate(std::string name, double log_alpha = kGateInitLogAlpha,
                            HardConcreteParams params = {});

  // Not copyable: the tape stores a pointer to log_alpha.
  HardConcreteGate(const HardConcreteGate&) = delete;
  HardConcreteGate& operator=(const HardConcreteGate&) = delete;

  double log_alpha() const { return log_alpha_.value[0]; }
  void set_log_alpha(double v) { log_alpha_.value[0] = v; }
  const HardConcreteParams& params() const { return params_; }
  Parameter& parameter() { return log_alpha_; }

  bool frozen() const { return log_alpha_.frozen; }
  void set_frozen(bool frozen) { log_alpha_.frozen = frozen; }

  double prob_nonzero() const;
  double deterministic_value() const;
  /// Gate value for a given noise draw u in (0,1).
  double value_for_noise(double u) const;

  /// Differentiable sample (reparametrized through u). u of exactly 0 or 1
  /// is redrawn. A frozen gate returns its deterministic value as a constant.
  ad::Var sample(ad::Tape& tape, Rng& rng);
  ad::Var sample_with_noise(ad::Tape& tape, double u);
  /// Deterministic evaluation; untracked when frozen.
  ad::Var deterministic(ad::Tape& tape);
  ad::Var prob_nonzero(ad::Tape& tape);

 private:
  Parameter log_alpha_;
  HardConcreteParams params_;
};

/// The trajectory gate and the attention gate.
struct GateSet {
  HardConcreteGate trajectory{"gate.trajectory"};
  HardConcreteGate attention{"gate.attention"};

  void set_frozen(bool frozen) {
    trajectory.set_frozen(frozen);
    attention.set_frozen(frozen);
  }
  bool frozen() const { return trajectory.frozen() && attention.frozen(); }
};

enum class GateMode { train, eval };

/// lambda * sum of P(g != 0) over both gates.
double l0_penalty(const GateSet& gates, double lambda);
ad::Var l0_penalty(ad::Tape& tape, GateSet& gates, double lambda);

/// Number of non-zero gates among hard values.
int discrete_l0(double trajectory_value, double attention_value);

/// (T * g_tau, A * g_a). Train mode draws one fresh sample per gate; eval
/// mode uses the deterministic values.
std::pair<ad::Var, ad::Var> apply_gates(ad::Tape& tape, ad::Var trajectory, ad::Var attention,
                                        GateSet& gates, GateMode mode, Rng* rng);

}  // namespace socialprobe
