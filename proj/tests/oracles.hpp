// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference computations written independently of the library code paths.
// Values frozen into tests were first produced by these functions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "socialprobe/autodiff.hpp"
#include "socialprobe/data.hpp"

namespace oracle {

using socialprobe::Parameter;
namespace ad = socialprobe::ad;

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
/// coordinate of every parameter; numeric from central differences.
inline double max_fd_error(std::span<Parameter* const> params,
                           const std::function<ad::Var(ad::Tape&)>& loss, double h = 1e-6) {
  for (Parameter* p : params) p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    ad::Tape tape;
    return loss(tape).value().item();
  };
  double worst = 0.0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = eval();
      p->value[i] = saved - h;
      const double down = eval();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      worst = std::max(worst, std::abs(numeric - analytic) /
                                  std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return worst;
}

/// theta after one bias-corrected Adam step from zero moments.
inline double adam_first_step(double theta, double g, double lr, double b1 = 0.9,
                              double b2 = 0.999, double eps = 1e-8) {
  const double m = (1.0 - b1) * g;
  const double v = (1.0 - b2) * g * g;
  const double m_hat = m / (1.0 - b1);
  const double v_hat = v / (1.0 - b2);
  return theta - lr * m_hat / (std::sqrt(v_hat) + eps);
}

/// P(g != 0) for the stretched, clamped binary Concrete: the sample is zero
/// when s <= -gamma / (zeta - gamma), with s a logistic of (L + log_alpha)/beta.
inline double gate_nonzero_probability(double log_alpha, double beta = 0.5, double gamma = -0.1,
                                       double zeta = 1.1) {
  const double s0 = -gamma / (zeta - gamma);
  // P(s > s0) = P(L > beta * logit(s0) - log_alpha), L standard logistic.
  const double threshold = beta * std::log(s0 / (1.0 - s0)) - log_alpha;
  return 1.0 / (1.0 + std::exp(threshold));
}

/// Per-point loop ADE/FDE.
inline double naive_ade(std::span<const socialprobe::Vec2> a, std::span<const socialprobe::Vec2> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i].x - b[i].x;
    const double dy = a[i].y - b[i].y;
    total += std::sqrt(dx * dx + dy * dy);
  }
  return total / static_cast<double>(a.size());
}

inline double naive_fde(std::span<const socialprobe::Vec2> a, std::span<const socialprobe::Vec2> b) {
  const double dx = a.back().x - b.back().x;
  const double dy = a.back().y - b.back().y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace oracle
