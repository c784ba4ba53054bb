// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The generic architecture: a shared-weight trajectory encoder, a social
// (attention) module summarizing neighbours, and a feed-forward prediction
// module; plus the naive baselines that skip the social module.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "socialprobe/autodiff.hpp"
#include "socialprobe/data.hpp"
#include "socialprobe/gating.hpp"
#include "socialprobe/nn.hpp"

namespace socialprobe {

enum class ModelKind { cv, basic_mlp, lstm_mlp, vain, social_ways, social_bigat };

inline constexpr std::array<ModelKind, 6> kAllModelKinds = {
    ModelKind::basic_mlp, ModelKind::lstm_mlp,   ModelKind::social_bigat,
    ModelKind::social_ways, ModelKind::vain,     ModelKind::cv};

std::string_view to_string(ModelKind kind);
/// Throws ConfigError on unknown identifiers.
ModelKind parse_model_kind(std::string_view name);
bool is_social(ModelKind kind);

inline constexpr std::size_t kEncoderWidth = 32;
inline constexpr std::size_t kAttentionWidth = 32;
inline constexpr std::size_t kDecoderHidden = 64;
inline constexpr std::size_t kStateWidth = 4;  // x, y, vx, vy
inline constexpr double kVainEpsilon = 1e-6;
inline constexpr std::size_t kGatHeads = 4;
inline constexpr double kGatSlope = 0.2;
inline constexpr std::size_t kScoreHidden = 64;

/// Model-space inputs for a batch of windows that are already normalized.
/// The neighbour axis is padded to the largest neighbour count in the batch;
/// neighbour row b*slots + k belongs to window b.
struct Batch {
  std::size_t size = 0;
  std::size_t slots = 0;
  std::array<Tensor, kObsLen> main_steps;       // [B, 4]
  std::array<Tensor, kObsLen> neighbour_steps;  // [B*K, 4]
  Tensor main_last;                             // [B, 4]
  Tensor neighbour_last;                        // [B*K, 4]
  Tensor mask;                                  // [B, K]
  Tensor any_neighbour;                         // [B, 1]
  Tensor features;                              // [B*K, 3]
  Tensor last_position;                         // [B, 2]
  Tensor target;                                // [B, 24], positions x0 y0 x1 y1 ...
};

Batch make_batch(std::span<const TrajectoryWindow> normalized);

struct HandcraftedFeatures {
  double distance = 0.0;
  double bearing = 0.0;
  double dca = 0.0;
};

/// Distance, bearing of the neighbour relative to the main heading, and
/// distance of closest approach under constant velocities.
HandcraftedFeatures handcrafted_features(const AgentState& main, const AgentState& neighbour);

struct SocialContext {
  ad::Var context;  // [B, D]
  ad::Var weights;  // [B, K], mean over heads for multi-head attention
};

/// Vain kernel: w_j proportional to 1/(eps + d2_j) over unmasked entries.
ad::Var vain_weights(ad::Var squared_distances, const Tensor& mask, double eps);

class SocialModule {
 public:
  virtual ~SocialModule() = default;
  virtual SocialContext attend(ad::Tape& tape, const Batch& batch, ad::Var main_encoding,
                               const Lstm& encoder) const = 0;
  virtual std::size_t width() const = 0;
};

class VainAttention final : public SocialModule {
 public:
  VainAttention(ParameterStore& store, Rng& rng, double eps = kVainEpsilon);
  SocialContext attend(ad::Tape& tape, const Batch& batch, ad::Var main_encoding,
                       const Lstm& encoder) const override;
  std::size_t width() const override { return kAttentionWidth; }

 private:
  Linear projection_;
  double eps_;
};

class SocialWaysAttention final : public SocialModule {
 public:
  SocialWaysAttention(ParameterStore& store, Rng& rng);
  SocialContext attend(ad::Tape& tape, const Batch& batch, ad::Var main_encoding,
                       const Lstm& encoder) const override;
  std::size_t width() const override { return kEncoderWidth; }

 private:
  Mlp score_;
};

class GraphAttention final : public SocialModule {
 public:
  GraphAttention(ParameterStore& store, Rng& rng);
  SocialContext attend(ad::Tape& tape, const Batch& batch, ad::Var main_encoding,
                       const Lstm& encoder) const override;
  std::size_t width() const override { return kAttentionWidth; }

 private:
  Linear shared_;
  std::vector<Parameter*> score_main_;
  std::vector<Parameter*> score_neighbour_;
};

/// Per-step displacements [B,24] accumulated from each row's last observed
/// position into absolute positions [B,24].
ad::Var accumulate_displacements(ad::Tape& tape, ad::Var displacements,
                                 const Tensor& last_position);

struct ForwardOptions {
  GateMode mode = GateMode::eval;
  Rng* rng = nullptr;
  bool use_gates = true;  // false: the ungated architecture
};

class Model {
 public:
  virtual ~Model() = default;
  virtual ModelKind kind() const = 0;
  /// Predicted future positions [B, 24] in normalized space.
  virtual ad::Var forward(ad::Tape& tape, const Batch& batch, ForwardOptions opts) = 0;
  virtual GateSet* gates() { return nullptr; }

  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  /// Every learnable parameter, including gate logits when present.
  virtual std::vector<Parameter*> trainable();

 protected:
  ParameterStore params_;
};

/// Constant velocity: p_last + k * (p_last - p_prev).
class ConstantVelocity final : public Model {
 public:
  ModelKind kind() const override { return ModelKind::cv; }
  ad::Var forward(ad::Tape& tape, const Batch& batch, ForwardOptions opts) override;
};

/// MLP on the last position and velocity.
class BasicMlp final : public Model {
 public:
  explicit BasicMlp(Rng& rng);
  ModelKind kind() const override { return ModelKind::basic_mlp; }
  ad::Var forward(ad::Tape& tape, const Batch& batch, ForwardOptions opts) override;
  Mlp& decoder() { return decoder_; }

 private:
  Mlp decoder_;
};

/// LSTM encoding of the observed path followed by an MLP decoder.
class LstmMlp final : public Model {
 public:
  explicit LstmMlp(Rng& rng);
  ModelKind kind() const override { return ModelKind::lstm_mlp; }
  ad::Var forward(ad::Tape& tape, const Batch& batch, ForwardOptions opts) override;
  Mlp& decoder() { return decoder_; }

 private:
  Lstm encoder_;
  Mlp decoder_;
};

/// Trajectory module + social module + prediction module, with gates on the
/// two module outputs (frozen open unless the gating protocol unfreezes them).
class GenericModel final : public Model {
 public:
  GenericModel(ModelKind kind, Rng& rng);
  ModelKind kind() const override { return kind_; }
  ad::Var forward(ad::Tape& tape, const Batch& batch, ForwardOptions opts) override;
  GateSet* gates() override { return &gates_; }
  std::vector<Parameter*> trainable() override;

  ad::Var encode(ad::Tape& tape, std::span<const Tensor> steps) const;
  SocialContext social_context(ad::Tape& tape, const Batch& batch) const;
  /// Prediction module on the (possibly gated) module outputs.
  ad::Var predict(ad::Tape& tape, ad::Var trajectory, ad::Var social,
                  const Tensor& last_position) const;

  const SocialModule& social() const { return *social_; }
  Mlp& decoder() { return decoder_; }

 private:
  ModelKind kind_;
  Lstm encoder_;
  std::unique_ptr<SocialModule> social_;
  Mlp decoder_;
  GateSet gates_;
};

std::unique_ptr<Model> make_model(ModelKind kind, Rng& rng);

/// Constant-velocity extrapolation of raw positions (meters or any space).
std::array<Vec2, kPredLen> baseline_cv(std::span<const Vec2> observed);

/// Row b of a [B,24] prediction as 12 positions mapped back through `norm`.
std::array<Vec2, kPredLen> prediction_row(const Tensor& pred, std::size_t row,
                                          const Normalizer& norm);

/// Sets a Linear layer's weight and bias to zero.
void zero_layer(const Linear& layer);

}  // namespace socialprobe
