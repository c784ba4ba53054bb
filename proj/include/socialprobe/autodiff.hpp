// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-mode automatic differentiation over rank-2 tensors.
//
// A Tape records one computation (one training step). Every primitive checks
// operand shapes and rejects non-finite results. Nodes are appended in
// evaluation order, so the reverse of insertion order is a valid topological
// order and backward() visits each node exactly once.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "socialprobe/tensor.hpp"

namespace socialprobe {

/// A learnable tensor. Gradients accumulate into `grad` across backward calls
/// until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v);
  void zero_grad();
};

namespace ad {

enum class OpTag : std::uint8_t {
  constant,
  parameter,
  add,
  add_row,
  sub,
  mul,
  scale,
  add_scalar,
  mul_scalar,
  mul_col,
  matmul,
  concat_cols,
  slice_cols,
  reshape,
  repeat_rows,
  sigmoid,
  tanh,
  relu,
  leaky_relu,
  clamp,
  reciprocal,
  square,
  sum_cols,
  sum_all,
  mean_all,
  softmax,
  masked_softmax,
  masked_normalize,
  weighted_pool,
  mse,
  l2_norm,
};

const char* op_name(OpTag op);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  bool tracked() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

struct TapeNode;
using BackwardFn = std::function<void(Tape&, const TapeNode&)>;

struct TapeNode {
  OpTag op = OpTag::constant;
  std::vector<std::size_t> inputs;
  Tensor value;
  Tensor grad;
  bool tracked = false;
  Parameter* param = nullptr;
  BackwardFn backward;
};

class Tape {
 public:
  Var constant(Tensor value);
  Var scalar(double v) { return constant(Tensor::scalar(v)); }
  /// Leaf bound to a parameter. Frozen parameters enter as untracked leaves.
  Var parameter(Parameter& p);

  /// Appends a node. Throws NumericError if `value` is not finite.
  Var record(OpTag op, std::span<const Var> inputs, Tensor value, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every tracked parameter.
  void backward(Var loss);

  const TapeNode& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer of a tracked node, zero-initialized on first use.
  /// Returns nullptr for untracked nodes so backward rules can skip them.
  Tensor* grad_target(std::size_t id);

 private:
  std::vector<TapeNode> nodes_;
};

// Elementwise, same shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// a [r,c] + bias [1,c] broadcast over rows.
Var add_row(Var a, Var bias);
Var scale(Var a, double k);
Var add_scalar(Var a, double k);
// a * s with s a 1x1 tensor.
Var mul_scalar(Var a, Var s);
// a [r,c] * m [r,1] broadcast over columns.
Var mul_col(Var a, Var m);
Var matmul(Var a, Var b);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var reshape(Var a, std::size_t rows, std::size_t cols);
// Row i of the input becomes rows [i*k, i*k+k) of the output.
Var repeat_rows(Var a, std::size_t k);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
// Gradient is zero where the input lies outside [lo, hi].
Var clamp(Var a, double lo, double hi);
Var reciprocal(Var a);
Var square(Var a);

Var sum_cols(Var a);
Var sum_all(Var a);
Var mean_all(Var a);
// axis 0: normalize each column; axis 1: normalize each row.
Var softmax(Var a, int axis);
// Row-wise softmax over entries with mask != 0. Masked entries get weight 0;
// a fully masked row yields all zeros.
Var masked_softmax(Var logits, const Tensor& mask);
// Row-wise w = a*mask / sum(a*mask) for non-negative a; fully masked rows
// yield zeros.
Var masked_normalize(Var a, const Tensor& mask);
// weights [B,K], items [B*K,D] -> [B,D] with out_b = sum_k w_bk * items_{bK+k}.
Var weighted_pool(Var weights, Var items);
// Mean over all elements of (pred - target)^2.
Var mse(Var pred, Var target);
Var l2_norm(Var a);

}  // namespace ad
}  // namespace socialprobe
