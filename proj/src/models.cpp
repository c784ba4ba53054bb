// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/models.hpp"

#include <algorithm>
#include <cmath>

#include "socialprobe/error.hpp"

namespace socialprobe {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cv: return "cv";
    case ModelKind::basic_mlp: return "basic_mlp";
    case ModelKind::lstm_mlp: return "lstm_mlp";
    case ModelKind::vain: return "vain";
    case ModelKind::social_ways: return "social_ways";
    case ModelKind::social_bigat: return "social_bigat";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : kAllModelKinds) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(name) +
                    "' (expected cv, basic_mlp, lstm_mlp, vain, social_ways, social_bigat)");
}

bool is_social(ModelKind kind) {
  return kind == ModelKind::vain || kind == ModelKind::social_ways ||
         kind == ModelKind::social_bigat;
}

namespace {

void put_state(Tensor& t, std::size_t row, const AgentState& s) {
  t(row, 0) = s.pos.x;
  t(row, 1) = s.pos.y;
  t(row, 2) = s.vel.x;
  t(row, 3) = s.vel.y;
}

}  // namespace

Batch make_batch(std::span<const TrajectoryWindow> normalized) {
  Batch b;
  b.size = normalized.size();
  for (const auto& w : normalized) b.slots = std::max(b.slots, w.neighbours.size());
  const std::size_t B = b.size;
  const std::size_t K = b.slots;

  for (std::size_t t = 0; t < kObsLen; ++t) {
    b.main_steps[t] = Tensor(B, kStateWidth);
    b.neighbour_steps[t] = Tensor(B * K, kStateWidth);
  }
  b.main_last = Tensor(B, kStateWidth);
  b.neighbour_last = Tensor(B * K, kStateWidth);
  b.mask = Tensor(B, K);
  b.any_neighbour = Tensor(B, 1);
  b.features = Tensor(B * K, 3);
  b.last_position = Tensor(B, 2);
  b.target = Tensor(B, 2 * kPredLen);

  for (std::size_t i = 0; i < B; ++i) {
    const TrajectoryWindow& w = normalized[i];
    for (std::size_t t = 0; t < kObsLen; ++t) put_state(b.main_steps[t], i, w.observed[t]);
    const AgentState& last = w.observed[kObsLen - 1];
    put_state(b.main_last, i, last);
    b.last_position(i, 0) = last.pos.x;
    b.last_position(i, 1) = last.pos.y;
    for (std::size_t k = 0; k < kPredLen; ++k) {
      b.target(i, 2 * k) = w.future[k].x;
      b.target(i, 2 * k + 1) = w.future[k].y;
    }
    b.any_neighbour(i, 0) = w.neighbours.empty() ? 0.0 : 1.0;
    for (std::size_t j = 0; j < w.neighbours.size(); ++j) {
      const NeighbourTrack& nb = w.neighbours[j];
      const std::size_t row = i * K + j;
      for (std::size_t t = 0; t < kObsLen; ++t) {
        if (nb.valid[t]) put_state(b.neighbour_steps[t], row, nb.steps[t]);
      }
      put_state(b.neighbour_last, row, nb.steps[kObsLen - 1]);
      b.mask(i, j) = 1.0;
      const HandcraftedFeatures f = handcrafted_features(last, nb.steps[kObsLen - 1]);
      b.features(row, 0) = f.distance;
      b.features(row, 1) = f.bearing;
      b.features(row, 2) = f.dca;
    }
  }
  return b;
}

HandcraftedFeatures handcrafted_features(const AgentState& main, const AgentState& neighbour) {
  const Vec2 dp = neighbour.pos - main.pos;
  const Vec2 dv = neighbour.vel - main.vel;
  HandcraftedFeatures f;
  f.distance = dp.norm();

  const double speed = main.vel.norm();
  if (speed > 0.0 && f.distance > 0.0) {
    const double c = std::clamp(main.vel.dot(dp) / (speed * f.distance), -1.0, 1.0);
    f.bearing = std::acos(c);
  }

  const double dv2 = dv.dot(dv);
  if (dv2 == 0.0) {
    f.dca = f.distance;
  } else {
    const double t_star = std::max(0.0, -dp.dot(dv) / dv2);
    f.dca = std::min(f.distance, (dp + t_star * dv).norm());
  }
  return f;
}

ad::Var vain_weights(ad::Var squared_distances, const Tensor& mask, double eps) {
  ad::Var score = ad::reciprocal(ad::add_scalar(squared_distances, eps));
  return ad::masked_normalize(score, mask);
}

namespace {

SocialContext empty_context(ad::Tape& tape, std::size_t batch, std::size_t width) {
  return {tape.constant(Tensor(batch, width)), tape.constant(Tensor(batch, 0))};
}

}  // namespace

VainAttention::VainAttention(ParameterStore& store, Rng& rng, double eps)
    : projection_(store, "vain.projection", kStateWidth, kAttentionWidth, rng), eps_(eps) {}

SocialContext VainAttention::attend(ad::Tape& tape, const Batch& batch, ad::Var,
                                    const Lstm&) const {
  const std::size_t B = batch.size;
  const std::size_t K = batch.slots;
  if (K == 0) return empty_context(tape, B, width());
  ad::Var pm = ad::relu(projection_(tape, tape.constant(batch.main_last)));
  ad::Var pn = ad::relu(projection_(tape, tape.constant(batch.neighbour_last)));
  ad::Var diff = ad::sub(pn, ad::repeat_rows(pm, K));
  ad::Var d2 = ad::reshape(ad::sum_cols(ad::square(diff)), B, K);
  ad::Var w = vain_weights(d2, batch.mask, eps_);
  return {ad::weighted_pool(w, pn), w};
}

SocialWaysAttention::SocialWaysAttention(ParameterStore& store, Rng& rng) {
  const std::size_t widths[] = {3 + kEncoderWidth, kScoreHidden, 1};
  score_ = Mlp(store, "social_ways.score", widths, rng);
}

SocialContext SocialWaysAttention::attend(ad::Tape& tape, const Batch& batch, ad::Var,
                                          const Lstm& encoder) const {
  const std::size_t B = batch.size;
  const std::size_t K = batch.slots;
  if (K == 0) return empty_context(tape, B, width());
  ad::Var emb = encoder(tape, batch.neighbour_steps);
  ad::Var parts[] = {tape.constant(batch.features), emb};
  ad::Var scores = ad::reshape(score_(tape, ad::concat_cols(parts)), B, K);
  ad::Var w = ad::masked_softmax(scores, batch.mask);
  return {ad::weighted_pool(w, emb), w};
}

GraphAttention::GraphAttention(ParameterStore& store, Rng& rng)
    : shared_(store, "gat.shared", kEncoderWidth, kAttentionWidth, rng, /*with_bias=*/false) {
  const std::size_t head = kAttentionWidth / kGatHeads;
  for (std::size_t h = 0; h < kGatHeads; ++h) {
    const std::string tag = std::to_string(h);
    score_main_.push_back(&store.add("gat.score_main." + tag, uniform_init(head, 1, 2 * head, rng)));
    score_neighbour_.push_back(
        &store.add("gat.score_neighbour." + tag, uniform_init(head, 1, 2 * head, rng)));
  }
}

SocialContext GraphAttention::attend(ad::Tape& tape, const Batch& batch, ad::Var main_encoding,
                                     const Lstm& encoder) const {
  const std::size_t B = batch.size;
  const std::size_t K = batch.slots;
  if (K == 0) return empty_context(tape, B, width());
  const std::size_t head = kAttentionWidth / kGatHeads;
  ad::Var emb = encoder(tape, batch.neighbour_steps);
  ad::Var zm = shared_(tape, main_encoding);
  ad::Var zn = shared_(tape, emb);

  std::vector<ad::Var> outputs;
  ad::Var weight_sum;
  for (std::size_t h = 0; h < kGatHeads; ++h) {
    ad::Var zm_h = ad::slice_cols(zm, h * head, head);
    ad::Var zn_h = ad::slice_cols(zn, h * head, head);
    ad::Var sm = ad::matmul(zm_h, tape.parameter(*score_main_[h]));
    ad::Var sn = ad::matmul(zn_h, tape.parameter(*score_neighbour_[h]));
    ad::Var e = ad::leaky_relu(ad::add(ad::repeat_rows(sm, K), sn), kGatSlope);
    ad::Var w = ad::masked_softmax(ad::reshape(e, B, K), batch.mask);
    outputs.push_back(ad::weighted_pool(w, zn_h));
    weight_sum = h == 0 ? w : ad::add(weight_sum, w);
  }
  ad::Var pooled = ad::sigmoid(ad::concat_cols(outputs));
  // sigmoid(0) = 0.5; rows without neighbours must stay zero.
  ad::Var context = ad::mul_col(pooled, tape.constant(batch.any_neighbour));
  return {context, ad::scale(weight_sum, 1.0 / static_cast<double>(kGatHeads))};
}

ad::Var accumulate_displacements(ad::Tape& tape, ad::Var displacements,
                                 const Tensor& last_position) {
  const std::size_t n = 2 * kPredLen;
  if (displacements.cols() != n || last_position.rows() != displacements.rows()) {
    throw ShapeError("accumulate_displacements: got " + displacements.value().shape_string() +
                     " displacements for " + last_position.shape_string() + " positions");
  }
  // Upper-triangular per axis: column 2k+a sums rows 2j+a for j <= k.
  Tensor prefix(n, n);
  for (std::size_t j = 0; j < kPredLen; ++j)
    for (std::size_t k = j; k < kPredLen; ++k)
      for (std::size_t a = 0; a < 2; ++a) prefix(2 * j + a, 2 * k + a) = 1.0;
  Tensor origin(last_position.rows(), n);
  for (std::size_t r = 0; r < origin.rows(); ++r)
    for (std::size_t k = 0; k < kPredLen; ++k) {
      origin(r, 2 * k) = last_position(r, 0);
      origin(r, 2 * k + 1) = last_position(r, 1);
    }
  return ad::add(ad::matmul(displacements, tape.constant(std::move(prefix))),
                 tape.constant(std::move(origin)));
}

std::vector<Parameter*> Model::trainable() { return params_.all(); }

ad::Var ConstantVelocity::forward(ad::Tape& tape, const Batch& batch, ForwardOptions) {
  Tensor out(batch.size, 2 * kPredLen);
  for (std::size_t i = 0; i < batch.size; ++i) {
    std::array<Vec2, 2> obs = {Vec2{batch.main_steps[kObsLen - 2](i, 0),
                                    batch.main_steps[kObsLen - 2](i, 1)},
                               Vec2{batch.main_steps[kObsLen - 1](i, 0),
                                    batch.main_steps[kObsLen - 1](i, 1)}};
    const auto pred = baseline_cv(obs);
    for (std::size_t k = 0; k < kPredLen; ++k) {
      out(i, 2 * k) = pred[k].x;
      out(i, 2 * k + 1) = pred[k].y;
    }
  }
  return tape.constant(std::move(out));
}

namespace {

std::array<std::size_t, 4> decoder_widths(std::size_t in) {
  return {in, kDecoderHidden, kDecoderHidden, 2 * kPredLen};
}

}  // namespace

BasicMlp::BasicMlp(Rng& rng) {
  const auto widths = decoder_widths(kStateWidth);
  decoder_ = Mlp(params_, "decoder", widths, rng);
}

ad::Var BasicMlp::forward(ad::Tape& tape, const Batch& batch, ForwardOptions) {
  ad::Var disp = decoder_(tape, tape.constant(batch.main_last));
  return accumulate_displacements(tape, disp, batch.last_position);
}

LstmMlp::LstmMlp(Rng& rng) : encoder_(params_, "encoder", kStateWidth, kEncoderWidth, rng) {
  const auto widths = decoder_widths(kEncoderWidth);
  decoder_ = Mlp(params_, "decoder", widths, rng);
}

ad::Var LstmMlp::forward(ad::Tape& tape, const Batch& batch, ForwardOptions) {
  ad::Var t = encoder_(tape, batch.main_steps);
  return accumulate_displacements(tape, decoder_(tape, t), batch.last_position);
}

GenericModel::GenericModel(ModelKind kind, Rng& rng)
    : kind_(kind), encoder_(params_, "encoder", kStateWidth, kEncoderWidth, rng) {
  switch (kind) {
    case ModelKind::vain: social_ = std::make_unique<VainAttention>(params_, rng); break;
    case ModelKind::social_ways:
      social_ = std::make_unique<SocialWaysAttention>(params_, rng);
      break;
    case ModelKind::social_bigat: social_ = std::make_unique<GraphAttention>(params_, rng); break;
    default: throw ConfigError("GenericModel needs a social model kind");
  }
  const auto widths = decoder_widths(kEncoderWidth + social_->width());
  decoder_ = Mlp(params_, "decoder", widths, rng);
  gates_.set_frozen(true);
}

std::vector<Parameter*> GenericModel::trainable() {
  auto out = params_.all();
  out.push_back(&gates_.trajectory.parameter());
  out.push_back(&gates_.attention.parameter());
  return out;
}

ad::Var GenericModel::encode(ad::Tape& tape, std::span<const Tensor> steps) const {
  return encoder_(tape, steps);
}

SocialContext GenericModel::social_context(ad::Tape& tape, const Batch& batch) const {
  return social_->attend(tape, batch, encoder_(tape, batch.main_steps), encoder_);
}

ad::Var GenericModel::predict(ad::Tape& tape, ad::Var trajectory, ad::Var social,
                              const Tensor& last_position) const {
  ad::Var parts[] = {trajectory, social};
  return accumulate_displacements(tape, decoder_(tape, ad::concat_cols(parts)), last_position);
}

ad::Var GenericModel::forward(ad::Tape& tape, const Batch& batch, ForwardOptions opts) {
  ad::Var t = encoder_(tape, batch.main_steps);
  SocialContext ctx = social_->attend(tape, batch, t, encoder_);
  if (!opts.use_gates) return predict(tape, t, ctx.context, batch.last_position);
  auto [t_gated, a_gated] = apply_gates(tape, t, ctx.context, gates_, opts.mode, opts.rng);
  return predict(tape, t_gated, a_gated, batch.last_position);
}

std::unique_ptr<Model> make_model(ModelKind kind, Rng& rng) {
  switch (kind) {
    case ModelKind::cv: return std::make_unique<ConstantVelocity>();
    case ModelKind::basic_mlp: return std::make_unique<BasicMlp>(rng);
    case ModelKind::lstm_mlp: return std::make_unique<LstmMlp>(rng);
    default: return std::make_unique<GenericModel>(kind, rng);
  }
}

std::array<Vec2, kPredLen> baseline_cv(std::span<const Vec2> observed) {
  if (observed.size() < 2) throw Error("baseline_cv: need at least two observed positions");
  const Vec2 last = observed[observed.size() - 1];
  const Vec2 step = last - observed[observed.size() - 2];
  std::array<Vec2, kPredLen> out;
  for (std::size_t k = 0; k < kPredLen; ++k) out[k] = last + static_cast<double>(k + 1) * step;
  return out;
}

std::array<Vec2, kPredLen> prediction_row(const Tensor& pred, std::size_t row,
                                          const Normalizer& norm) {
  std::array<Vec2, kPredLen> out;
  for (std::size_t k = 0; k < kPredLen; ++k) {
    out[k] = norm.invert({pred(row, 2 * k), pred(row, 2 * k + 1)});
  }
  return out;
}

void zero_layer(const Linear& layer) {
  layer.weight().value.fill(0.0);
  if (layer.bias() != nullptr) layer.bias()->value.fill(0.0);
}

}  // namespace socialprobe
