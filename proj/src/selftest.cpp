// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "socialprobe/gating.hpp"
#include "socialprobe/metrics.hpp"
#include "socialprobe/optim.hpp"

namespace socialprobe {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double loss_of(Model& model, const Batch& batch, std::uint64_t noise_seed, ad::Tape& tape) {
  Rng noise(noise_seed);
  ad::Var pred = model.forward(tape, batch, {GateMode::train, &noise});
  ad::Var loss = ad::mse(pred, tape.constant(batch.target));
  if (GateSet* g = model.gates()) loss = ad::add(loss, l0_penalty(tape, *g, kDefaultL0Lambda));
  return loss.value().item();
}

constexpr ModelKind kLearnable[] = {ModelKind::basic_mlp, ModelKind::lstm_mlp, ModelKind::vain,
                                    ModelKind::social_ways, ModelKind::social_bigat};

}  // namespace

bool SelftestReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const SelfCheck& c) { return c.passed; });
}

void SelftestReport::append(const SelftestReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

TrajectoryWindow random_window(Rng& rng, std::size_t max_neighbours) {
  TrajectoryWindow w;
  w.scene = "synthetic";
  auto walk = [&rng](Vec2 start, Vec2 step, std::size_t n, auto&& emit) {
    Vec2 p = start;
    for (std::size_t t = 0; t < n; ++t) {
      emit(t, p);
      step = step + Vec2{rng.uniform(-0.005, 0.005), rng.uniform(-0.005, 0.005)};
      p = p + step;
    }
  };
  const Vec2 start{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
  const Vec2 step{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)};
  walk(start, step, kWindowLen, [&](std::size_t t, Vec2 p) {
    if (t < kObsLen) {
      w.observed[t].pos = p;
    } else {
      w.future[t - kObsLen] = p;
    }
  });
  std::array<bool, kObsLen> all{};
  all.fill(true);
  fill_velocities(w.observed, all);

  const std::size_t count = rng.uniform_int(max_neighbours);
  for (std::size_t k = 0; k < count; ++k) {
    NeighbourTrack n;
    n.ped = static_cast<std::int64_t>(k + 1);
    const std::size_t first = rng.uniform_int(kObsLen - 1);
    const Vec2 ns{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const Vec2 nv{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)};
    walk(ns, nv, kObsLen, [&](std::size_t t, Vec2 p) {
      if (t >= first) {
        n.steps[t].pos = p;
        n.valid[t] = true;
      }
    });
    fill_velocities(n.steps, n.valid);
    w.neighbours.push_back(n);
  }
  return w;
}

double max_gradient_error(Model& model, const Batch& batch, std::uint64_t noise_seed,
                          std::size_t entries, Rng& pick) {
  std::vector<Parameter*> params = model.trainable();
  if (GateSet* g = model.gates()) {
    g->set_frozen(false);
    // Move off the clamp plateau so the gate logits carry gradient.
    g->trajectory.set_log_alpha(pick.uniform(-1.0, 1.0));
    g->attention.set_log_alpha(pick.uniform(-1.0, 1.0));
  }
  zero_grads(params);
  {
    ad::Tape tape;
    Rng noise(noise_seed);
    ad::Var pred = model.forward(tape, batch, {GateMode::train, &noise});
    ad::Var loss = ad::mse(pred, tape.constant(batch.target));
    if (GateSet* g = model.gates()) loss = ad::add(loss, l0_penalty(tape, *g, kDefaultL0Lambda));
    tape.backward(loss);
  }

  constexpr double h = 1e-6;
  double worst = 0.0;
  for (Parameter* p : params) {
    const std::size_t n = p->value.size();
    const std::size_t count = std::min(entries, n);
    for (std::size_t c = 0; c < count; ++c) {
      const std::size_t i = count == n ? c : pick.uniform_int(n - 1);
      const double saved = p->value[i];
      p->value[i] = saved + h;
      ad::Tape plus_tape;
      const double plus = loss_of(model, batch, noise_seed, plus_tape);
      p->value[i] = saved - h;
      ad::Tape minus_tape;
      const double minus = loss_of(model, batch, noise_seed, minus_tape);
      p->value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  zero_grads(params);
  return worst;
}

SelftestReport run_gradient_checks(std::uint64_t seed, std::size_t windows) {
  SelftestReport report;
  for (ModelKind kind : kLearnable) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(kind) + 100);
    double worst = 0.0;
    for (std::size_t w = 0; w < windows; ++w) {
      Rng init = rng.split(w);
      std::unique_ptr<Model> model = make_model(kind, init);
      const TrajectoryWindow window = random_window(rng, 3);
      const Batch batch = make_batch(std::span<const TrajectoryWindow>(&window, 1));
      worst = std::max(worst, max_gradient_error(*model, batch, seed + w, 6, rng));
    }
    report.checks.push_back({"gradient " + std::string(to_string(kind)), worst < 1e-4, worst,
                             "max relative error " + sci(worst) + " over " +
                                 std::to_string(windows) + " windows"});
  }
  return report;
}

SelftestReport run_attention_checks(std::uint64_t seed) {
  SelftestReport report;
  for (ModelKind kind : {ModelKind::vain, ModelKind::social_ways, ModelKind::social_bigat}) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(kind) + 200);
    Rng init = rng.split(1);
    GenericModel model(kind, init);
    std::vector<TrajectoryWindow> windows;
    for (int i = 0; i < 16; ++i) windows.push_back(random_window(rng, 5));
    windows.push_back(random_window(rng, 0));  // no neighbours
    const Batch batch = make_batch(windows);
    ad::Tape tape;
    const Tensor& w = model.social_context(tape, batch).weights.value();
    double worst = 0.0;
    for (std::size_t b = 0; b < batch.size; ++b) {
      double sum = 0.0;
      for (std::size_t k = 0; k < batch.slots; ++k) sum += w(b, k);
      const double expected = batch.any_neighbour(b, 0) > 0.0 ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(sum - expected));
    }
    report.checks.push_back({"attention sum " + std::string(to_string(kind)), worst <= 1e-9,
                             worst, "max |row sum - 1| " + sci(worst)});
  }
  return report;
}

SelftestReport run_gate_checks(std::uint64_t seed, std::size_t samples) {
  SelftestReport report;
  Rng rng = Rng(seed).split(300);
  for (double la : {-2.0, 0.0, 2.0}) {
    HardConcreteGate gate("probe", la);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < samples; ++i) {
      double u = rng.uniform();
      while (u == 0.0) u = rng.uniform();
      if (gate.value_for_noise(u) == 0.0) ++zeros;
    }
    const double mc = static_cast<double>(zeros) / static_cast<double>(samples);
    const double analytic = 1.0 - gate.prob_nonzero();
    const double err = std::abs(mc - analytic);
    char name[64];
    std::snprintf(name, sizeof name, "gate P(g=0) log_alpha=%+.0f", la);
    report.checks.push_back({name, err <= 0.005, err,
                             "monte carlo " + std::to_string(mc) + " vs closed form " +
                                 std::to_string(analytic)});
  }
  // Both gates fully open: P(g != 0) -> 1 as log_alpha grows.
  GateSet open;
  open.trajectory.set_log_alpha(40.0);
  open.attention.set_log_alpha(40.0);
  const double max_penalty = l0_penalty(open, kDefaultL0Lambda);
  report.checks.push_back({"L0 penalty maximum", std::abs(max_penalty - 0.01) <= 1e-12,
                           max_penalty, "penalty " + std::to_string(max_penalty)});
  return report;
}

SelftestReport run_metric_oracle(std::uint64_t seed, std::size_t pairs) {
  SelftestReport report;
  Rng rng = Rng(seed).split(400);
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    std::array<Vec2, kPredLen> a, b;
    for (std::size_t t = 0; t < kPredLen; ++t) {
      a[t] = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
      b[t] = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
    }
    double naive = 0.0;
    for (std::size_t t = 0; t < kPredLen; ++t) {
      const double dx = a[t].x - b[t].x;
      const double dy = a[t].y - b[t].y;
      naive += std::sqrt(dx * dx + dy * dy);
    }
    naive /= static_cast<double>(kPredLen);
    const double dx = a.back().x - b.back().x;
    const double dy = a.back().y - b.back().y;
    const double naive_final = std::sqrt(dx * dx + dy * dy);
    worst = std::max({worst, std::abs(ade(a, b) - naive), std::abs(fde(a, b) - naive_final)});
  }
  report.checks.push_back({"metric oracle", worst <= 1e-12, worst,
                           "max deviation " + sci(worst) + " over " + std::to_string(pairs) +
                               " pairs"});

  const std::array<Vec2, 2> zero{};
  const std::array<Vec2, 2> offset{Vec2{0.5, 0.0}, Vec2{0.5, 0.0}};
  const std::array<Vec2, 2> triangle{Vec2{0.0, 0.0}, Vec2{3.0, 4.0}};
  const bool hand = ade(offset, zero) == 0.5 && fde(offset, zero) == 0.5 &&
                    ade(triangle, zero) == 2.5 && fde(triangle, zero) == 5.0;
  report.checks.push_back({"metric hand cases", hand, 0.0, "0.5 offset and 3-4-5 step"});
  return report;
}

SelftestReport run_selftest(std::uint64_t seed) {
  SelftestReport report = run_gradient_checks(seed);
  report.append(run_attention_checks(seed));
  report.append(run_gate_checks(seed));
  report.append(run_metric_oracle(seed));
  return report;
}

}  // namespace socialprobe
