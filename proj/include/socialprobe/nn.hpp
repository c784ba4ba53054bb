// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socialprobe/autodiff.hpp"
#include "socialprobe/rng.hpp"

namespace socialprobe {

/// Owns a model's parameters with stable addresses, in creation order.
class ParameterStore {
 public:
  Parameter& add(std::string name, Tensor init);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool with_bias = true);

  ad::Var operator()(ad::Tape& tape, ad::Var x) const;

  Parameter& weight() const { return *weight_; }
  Parameter* bias() const { return bias_; }
  std::size_t in_features() const { return weight_->value.rows(); }
  std::size_t out_features() const { return weight_->value.cols(); }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

/// Linear layers with ReLU between them (not after the last).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, std::span<const std::size_t> widths,
      Rng& rng);

  ad::Var operator()(ad::Tape& tape, ad::Var x) const;
  const Linear& last() const { return layers_.back(); }
  std::size_t out_features() const { return layers_.back().out_features(); }

 private:
  std::vector<Linear> layers_;
};

/// Single-layer LSTM. Returns the final hidden state of each row.
class Lstm {
 public:
  Lstm() = default;
  Lstm(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
       Rng& rng);

  /// `steps[t]` is the [rows, in] input at time t. Initial state is zero.
  ad::Var operator()(ad::Tape& tape, std::span<const Tensor> steps) const;
  std::size_t hidden() const { return hidden_; }

 private:
  Parameter* input_weight_ = nullptr;
  Parameter* recurrent_weight_ = nullptr;
  Parameter* bias_ = nullptr;
  std::size_t hidden_ = 0;
};

/// JSON map name -> {shape, values}. Doubles are written with round-trip
/// precision, so save followed by load reproduces every bit.
void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path);
/// Every stored name must exist in `store` with the same shape.
void load_checkpoint(ParameterStore& store, const std::filesystem::path& path);

}  // namespace socialprobe
