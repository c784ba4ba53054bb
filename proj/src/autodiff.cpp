// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "socialprobe/error.hpp"

namespace socialprobe {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMajor>;
using MapCM = Eigen::Map<const RowMajor>;

namespace {

MapCM view(const Tensor& t) { return MapCM(t.data(), t.rows(), t.cols()); }
MapM view(Tensor& t) { return MapM(t.data(), t.rows(), t.cols()); }

}  // namespace

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), std::vector<double>(value.size(), 0.0)) {}

void Parameter::zero_grad() {
  if (grad.size() != value.size()) {
    grad = Tensor(value.shape(), std::vector<double>(value.size(), 0.0));
  } else {
    grad.fill(0.0);
  }
}

namespace ad {

const char* op_name(OpTag op) {
  switch (op) {
    case OpTag::constant: return "constant";
    case OpTag::parameter: return "parameter";
    case OpTag::add: return "add";
    case OpTag::add_row: return "add_row";
    case OpTag::sub: return "sub";
    case OpTag::mul: return "mul";
    case OpTag::scale: return "scale";
    case OpTag::add_scalar: return "add_scalar";
    case OpTag::mul_scalar: return "mul_scalar";
    case OpTag::mul_col: return "mul_col";
    case OpTag::matmul: return "matmul";
    case OpTag::concat_cols: return "concat_cols";
    case OpTag::slice_cols: return "slice_cols";
    case OpTag::reshape: return "reshape";
    case OpTag::repeat_rows: return "repeat_rows";
    case OpTag::sigmoid: return "sigmoid";
    case OpTag::tanh: return "tanh";
    case OpTag::relu: return "relu";
    case OpTag::leaky_relu: return "leaky_relu";
    case OpTag::clamp: return "clamp";
    case OpTag::reciprocal: return "reciprocal";
    case OpTag::square: return "square";
    case OpTag::sum_cols: return "sum_cols";
    case OpTag::sum_all: return "sum_all";
    case OpTag::mean_all: return "mean_all";
    case OpTag::softmax: return "softmax";
    case OpTag::masked_softmax: return "masked_softmax";
    case OpTag::masked_normalize: return "masked_normalize";
    case OpTag::weighted_pool: return "weighted_pool";
    case OpTag::mse: return "mse";
    case OpTag::l2_norm: return "l2_norm";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape->node(id).value; }
bool Var::tracked() const { return tape->node(id).tracked; }

Var Tape::constant(Tensor value) {
  return record(OpTag::constant, {}, std::move(value), nullptr);
}

Var Tape::parameter(Parameter& p) {
  Var v = record(OpTag::parameter, {}, p.value, nullptr);
  if (!p.frozen) {
    nodes_[v.id].tracked = true;
    nodes_[v.id].param = &p;
  }
  return v;
}

Var Tape::record(OpTag op, std::span<const Var> inputs, Tensor value, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite output from ") + op_name(op) + " (shape " +
                       value.shape_string() + ")");
  }
  TapeNode n;
  n.op = op;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape != this) throw Error(std::string(op_name(op)) + ": operand from another tape");
    n.inputs.push_back(in.id);
    n.tracked = n.tracked || nodes_[in.id].tracked;
  }
  if (n.tracked) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Tensor* Tape::grad_target(std::size_t id) {
  TapeNode& n = nodes_[id];
  if (!n.tracked) return nullptr;
  if (n.grad.size() != n.value.size()) {
    n.grad = Tensor(n.value.shape(), std::vector<double>(n.value.size(), 0.0));
  }
  return &n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error("backward: loss belongs to another tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     nodes_[loss.id].value.shape_string());
  }
  if (!nodes_[loss.id].tracked) return;
  grad_target(loss.id)->fill(1.0);

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    TapeNode& n = nodes_[i];
    if (!n.tracked || n.grad.size() != n.value.size()) continue;
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.size() != p.value.size()) p.zero_grad();
      for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad[k] += n.grad[k];
      continue;
    }
    if (n.backward) n.backward(*this, n);
    for (std::size_t in : n.inputs) {
      const TapeNode& src = nodes_[in];
      if (src.tracked && src.grad.size() == src.value.size() && !src.grad.all_finite()) {
        throw NumericError("backward: non-finite gradient produced by node #" +
                           std::to_string(i) + " (" + op_name(n.op) + ")");
      }
    }
  }
}

namespace {

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void require_rank2(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + a.shape_string());
  }
}

template <class F>
Tensor map_values(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// Backward for elementwise unary ops whose derivative is a function of
// (input, output).
template <class D>
BackwardFn unary_backward(D deriv) {
  return [deriv](Tape& t, const TapeNode& n) {
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      const Tensor& x = t.node(n.inputs[0]).value;
      for (std::size_t i = 0; i < x.size(); ++i) (*g)[i] += n.grad[i] * deriv(x[i], n.value[i]);
    }
  };
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
  require_same("add", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  Var ins[] = {a, b};
  return a.tape->record(OpTag::add, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    for (std::size_t in : n.inputs) {
      if (Tensor* g = t.grad_target(in)) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  Var ins[] = {a, b};
  return a.tape->record(OpTag::sub, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
    }
    if (Tensor* g = t.grad_target(n.inputs[1])) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= n.grad[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  Var ins[] = {a, b};
  return a.tape->record(OpTag::mul, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    const Tensor& x = t.node(n.inputs[0]).value;
    const Tensor& y = t.node(n.inputs[1]).value;
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * y[i];
    }
    if (Tensor* g = t.grad_target(n.inputs[1])) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * x[i];
    }
  });
}

Var add_row(Var a, Var bias) {
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  require_rank2("add_row", x);
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw ShapeError("add_row: bias shape " + b.shape_string() + " does not broadcast over " +
                     x.shape_string());
  }
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += b[c];
  Var ins[] = {a, bias};
  return a.tape->record(OpTag::add_row, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
    }
    if (Tensor* g = t.grad_target(n.inputs[1])) {
      const std::size_t cols = n.value.cols();
      for (std::size_t r = 0; r < n.value.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) (*g)[c] += n.grad(r, c);
    }
  });
}

Var scale(Var a, double k) {
  Tensor out = map_values(a.value(), [k](double v) { return v * k; });
  Var ins[] = {a};
  return a.tape->record(OpTag::scale, ins, std::move(out),
                        unary_backward([k](double, double) { return k; }));
}

Var add_scalar(Var a, double k) {
  Tensor out = map_values(a.value(), [k](double v) { return v + k; });
  Var ins[] = {a};
  return a.tape->record(OpTag::add_scalar, ins, std::move(out),
                        unary_backward([](double, double) { return 1.0; }));
}

Var mul_scalar(Var a, Var s) {
  if (s.value().size() != 1) {
    throw ShapeError("mul_scalar: scalar operand has shape " + s.value().shape_string());
  }
  const double k = s.value()[0];
  Tensor out = map_values(a.value(), [k](double v) { return v * k; });
  Var ins[] = {a, s};
  return a.tape->record(OpTag::mul_scalar, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    const Tensor& x = t.node(n.inputs[0]).value;
    const double k = t.node(n.inputs[1]).value[0];
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * k;
    }
    if (Tensor* g = t.grad_target(n.inputs[1])) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += n.grad[i] * x[i];
      (*g)[0] += acc;
    }
  });
}

Var mul_col(Var a, Var m) {
  const Tensor& x = a.value();
  const Tensor& w = m.value();
  require_rank2("mul_col", x);
  if (w.rows() != x.rows() || w.cols() != 1) {
    throw ShapeError("mul_col: column shape " + w.shape_string() + " does not broadcast over " +
                     x.shape_string());
  }
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) *= w[r];
  Var ins[] = {a, m};
  return a.tape->record(OpTag::mul_col, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    const Tensor& x = t.node(n.inputs[0]).value;
    const Tensor& w = t.node(n.inputs[1]).value;
    const std::size_t cols = x.cols();
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) (*g)(r, c) += n.grad(r, c) * w[r];
    }
    if (Tensor* g = t.grad_target(n.inputs[1])) {
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += n.grad(r, c) * x(r, c);
        (*g)[r] += acc;
      }
    }
  });
}

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2("matmul", x);
  require_rank2("matmul", y);
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + x.shape_string() + " vs " +
                     y.shape_string());
  }
  Tensor out(x.rows(), y.cols());
  view(out).noalias() = view(x) * view(y);
  Var ins[] = {a, b};
  return a.tape->record(OpTag::matmul, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    const Tensor& x = t.node(n.inputs[0]).value;
    const Tensor& y = t.node(n.inputs[1]).value;
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      view(*g).noalias() += view(n.grad) * view(y).transpose();
    }
    if (Tensor* g = t.grad_target(n.inputs[1])) {
      view(*g).noalias() += view(x).transpose() * view(n.grad);
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require_rank2("concat_cols", p.value());
    if (p.value().rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + parts[0].value().shape_string() + " vs " +
                       p.value().shape_string());
    }
    cols += p.value().cols();
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    off += v.cols();
  }
  return parts[0].tape->record(OpTag::concat_cols, parts, std::move(out),
                               [](Tape& t, const TapeNode& n) {
                                 std::size_t off = 0;
                                 for (std::size_t in : n.inputs) {
                                   const std::size_t w = t.node(in).value.cols();
                                   if (Tensor* g = t.grad_target(in)) {
                                     for (std::size_t r = 0; r < n.value.rows(); ++r)
                                       for (std::size_t c = 0; c < w; ++c)
                                         (*g)(r, c) += n.grad(r, off + c);
                                   }
                                   off += w;
                                 }
                               });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  require_rank2("slice_cols", x);
  if (begin + count > x.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + x.shape_string());
  }
  Tensor out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  Var ins[] = {a};
  return a.tape->record(OpTag::slice_cols, ins, std::move(out),
                        [begin, count](Tape& t, const TapeNode& n) {
                          if (Tensor* g = t.grad_target(n.inputs[0])) {
                            for (std::size_t r = 0; r < n.value.rows(); ++r)
                              for (std::size_t c = 0; c < count; ++c)
                                (*g)(r, begin + c) += n.grad(r, c);
                          }
                        });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& x = a.value();
  if (rows * cols != x.size()) {
    throw ShapeError("reshape: cannot view " + x.shape_string() + " as [" +
                     std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
  Tensor out({rows, cols}, std::vector<double>(x.values().begin(), x.values().end()));
  Var ins[] = {a};
  return a.tape->record(OpTag::reshape, ins, std::move(out),
                        unary_backward([](double, double) { return 1.0; }));
}

Var repeat_rows(Var a, std::size_t k) {
  const Tensor& x = a.value();
  require_rank2("repeat_rows", x);
  Tensor out(x.rows() * k, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < x.cols(); ++c) out(r * k + j, c) = x(r, c);
  Var ins[] = {a};
  return a.tape->record(OpTag::repeat_rows, ins, std::move(out), [k](Tape& t, const TapeNode& n) {
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      const std::size_t cols = g->cols();
      for (std::size_t r = 0; r < g->rows(); ++r)
        for (std::size_t j = 0; j < k; ++j)
          for (std::size_t c = 0; c < cols; ++c) (*g)(r, c) += n.grad(r * k + j, c);
    }
  });
}

Var sigmoid(Var a) {
  Tensor out = map_values(a.value(), stable_sigmoid);
  Var ins[] = {a};
  return a.tape->record(OpTag::sigmoid, ins, std::move(out),
                        unary_backward([](double, double y) { return y * (1.0 - y); }));
}

Var tanh(Var a) {
  Tensor out = map_values(a.value(), [](double v) { return std::tanh(v); });
  Var ins[] = {a};
  return a.tape->record(OpTag::tanh, ins, std::move(out),
                        unary_backward([](double, double y) { return 1.0 - y * y; }));
}

Var relu(Var a) {
  Tensor out = map_values(a.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  Var ins[] = {a};
  return a.tape->record(OpTag::relu, ins, std::move(out),
                        unary_backward([](double x, double) { return x > 0.0 ? 1.0 : 0.0; }));
}

Var leaky_relu(Var a, double slope) {
  Tensor out = map_values(a.value(), [slope](double v) { return v > 0.0 ? v : slope * v; });
  Var ins[] = {a};
  return a.tape->record(
      OpTag::leaky_relu, ins, std::move(out),
      unary_backward([slope](double x, double) { return x > 0.0 ? 1.0 : slope; }));
}

Var clamp(Var a, double lo, double hi) {
  Tensor out = map_values(a.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); });
  Var ins[] = {a};
  return a.tape->record(OpTag::clamp, ins, std::move(out),
                        unary_backward([lo, hi](double x, double) {
                          return (x > lo && x < hi) ? 1.0 : 0.0;
                        }));
}

Var reciprocal(Var a) {
  for (double v : a.value().values()) {
    if (v == 0.0) throw NumericError("reciprocal: division by zero");
  }
  Tensor out = map_values(a.value(), [](double v) { return 1.0 / v; });
  Var ins[] = {a};
  return a.tape->record(OpTag::reciprocal, ins, std::move(out),
                        unary_backward([](double, double y) { return -y * y; }));
}

Var square(Var a) {
  Tensor out = map_values(a.value(), [](double v) { return v * v; });
  Var ins[] = {a};
  return a.tape->record(OpTag::square, ins, std::move(out),
                        unary_backward([](double x, double) { return 2.0 * x; }));
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  require_rank2("sum_cols", x);
  Tensor out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) acc += x(r, c);
    out[r] = acc;
  }
  Var ins[] = {a};
  return a.tape->record(OpTag::sum_cols, ins, std::move(out), [](Tape& t, const TapeNode& n) {
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      const std::size_t cols = g->cols();
      for (std::size_t r = 0; r < g->rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) (*g)(r, c) += n.grad[r];
    }
  });
}

Var sum_all(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  Var ins[] = {a};
  return a.tape->record(OpTag::sum_all, ins, Tensor::scalar(acc), [](Tape& t, const TapeNode& n) {
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[0];
    }
  });
}

Var mean_all(Var a) {
  const double count = static_cast<double>(a.value().size());
  if (count == 0) throw ShapeError("mean_all: empty tensor");
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  Var ins[] = {a};
  return a.tape->record(OpTag::mean_all, ins, Tensor::scalar(acc / count),
                        [count](Tape& t, const TapeNode& n) {
                          if (Tensor* g = t.grad_target(n.inputs[0])) {
                            for (std::size_t i = 0; i < g->size(); ++i)
                              (*g)[i] += n.grad[0] / count;
                          }
                        });
}

namespace {

// Softmax over one strided lane; entries with active[i] == false are zero.
void softmax_lane(const double* in, double* out, std::size_t n, std::size_t stride,
                  const double* mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && mask[i * stride] == 0.0) continue;
    mx = std::max(mx, in[i * stride]);
  }
  if (!std::isfinite(mx)) {
    for (std::size_t i = 0; i < n; ++i) out[i * stride] = 0.0;
    return;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && mask[i * stride] == 0.0) {
      out[i * stride] = 0.0;
      continue;
    }
    out[i * stride] = std::exp(in[i * stride] - mx);
    total += out[i * stride];
  }
  for (std::size_t i = 0; i < n; ++i) out[i * stride] /= total;
}

// dL/dx_i = y_i (g_i - sum_j y_j g_j) along one lane.
void softmax_lane_backward(const double* y, const double* gy, double* gx, std::size_t n,
                           std::size_t stride) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += y[i * stride] * gy[i * stride];
  for (std::size_t i = 0; i < n; ++i) gx[i * stride] += y[i * stride] * (gy[i * stride] - dot);
}

}  // namespace

Var softmax(Var a, int axis) {
  const Tensor& x = a.value();
  require_rank2("softmax", x);
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
  Tensor out(x.rows(), x.cols());
  const std::size_t lanes = axis == 1 ? x.rows() : x.cols();
  const std::size_t len = axis == 1 ? x.cols() : x.rows();
  const std::size_t stride = axis == 1 ? 1 : x.cols();
  for (std::size_t l = 0; l < lanes; ++l) {
    const std::size_t base = axis == 1 ? l * x.cols() : l;
    softmax_lane(x.data() + base, out.data() + base, len, stride, nullptr);
  }
  Var ins[] = {a};
  return a.tape->record(OpTag::softmax, ins, std::move(out),
                        [lanes, len, stride, axis](Tape& t, const TapeNode& n) {
                          if (Tensor* g = t.grad_target(n.inputs[0])) {
                            for (std::size_t l = 0; l < lanes; ++l) {
                              const std::size_t base = axis == 1 ? l * n.value.cols() : l;
                              softmax_lane_backward(n.value.data() + base, n.grad.data() + base,
                                                    g->data() + base, len, stride);
                            }
                          }
                        });
}

Var masked_softmax(Var logits, const Tensor& mask) {
  const Tensor& x = logits.value();
  require_rank2("masked_softmax", x);
  require_same("masked_softmax", x, mask);
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    softmax_lane(x.data() + r * x.cols(), out.data() + r * x.cols(), x.cols(), 1,
                 mask.data() + r * x.cols());
  }
  Var ins[] = {logits};
  return logits.tape->record(OpTag::masked_softmax, ins, std::move(out),
                             [](Tape& t, const TapeNode& n) {
                               if (Tensor* g = t.grad_target(n.inputs[0])) {
                                 const std::size_t cols = n.value.cols();
                                 for (std::size_t r = 0; r < n.value.rows(); ++r) {
                                   softmax_lane_backward(n.value.data() + r * cols,
                                                         n.grad.data() + r * cols,
                                                         g->data() + r * cols, cols, 1);
                                 }
                               }
                             });
}

Var masked_normalize(Var a, const Tensor& mask) {
  const Tensor& x = a.value();
  require_rank2("masked_normalize", x);
  require_same("masked_normalize", x, mask);
  Tensor out(x.rows(), x.cols());
  std::vector<double> totals(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        if (x(r, c) < 0.0) throw NumericError("masked_normalize: negative score");
        total += x(r, c);
      }
    }
    totals[r] = total;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = (mask(r, c) != 0.0 && total > 0.0) ? x(r, c) / total : 0.0;
    }
  }
  Var ins[] = {a};
  return a.tape->record(
      OpTag::masked_normalize, ins, std::move(out),
      [mask, totals = std::move(totals)](Tape& t, const TapeNode& n) {
        if (Tensor* g = t.grad_target(n.inputs[0])) {
          const std::size_t cols = n.value.cols();
          for (std::size_t r = 0; r < n.value.rows(); ++r) {
            if (totals[r] <= 0.0) continue;
            // w_c = x_c / S  =>  dL/dx_c = (g_c - sum_j w_j g_j) / S over active entries.
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += n.value(r, c) * n.grad(r, c);
            for (std::size_t c = 0; c < cols; ++c) {
              if (mask(r, c) != 0.0) (*g)(r, c) += (n.grad(r, c) - dot) / totals[r];
            }
          }
        }
      });
}

Var weighted_pool(Var weights, Var items) {
  const Tensor& w = weights.value();
  const Tensor& e = items.value();
  require_rank2("weighted_pool", w);
  require_rank2("weighted_pool", e);
  const std::size_t b = w.rows();
  const std::size_t k = w.cols();
  if (e.rows() != b * k) {
    throw ShapeError("weighted_pool: weights " + w.shape_string() + " need " +
                     std::to_string(b * k) + " item rows, got " + e.shape_string());
  }
  const std::size_t d = e.cols();
  Tensor out(b, d);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) out(i, c) += wij * e(i * k + j, c);
    }
  Var ins[] = {weights, items};
  return weights.tape->record(
      OpTag::weighted_pool, ins, std::move(out), [b, k, d](Tape& t, const TapeNode& n) {
        const Tensor& w = t.node(n.inputs[0]).value;
        const Tensor& e = t.node(n.inputs[1]).value;
        if (Tensor* g = t.grad_target(n.inputs[0])) {
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < k; ++j) {
              double acc = 0.0;
              for (std::size_t c = 0; c < d; ++c) acc += n.grad(i, c) * e(i * k + j, c);
              (*g)(i, j) += acc;
            }
        }
        if (Tensor* g = t.grad_target(n.inputs[1])) {
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < k; ++j) {
              const double wij = w(i, j);
              if (wij == 0.0) continue;
              for (std::size_t c = 0; c < d; ++c) (*g)(i * k + j, c) += wij * n.grad(i, c);
            }
        }
      });
}

Var mse(Var pred, Var target) {
  require_same("mse", pred.value(), target.value());
  const Tensor& p = pred.value();
  const Tensor& y = target.value();
  if (p.size() == 0) throw ShapeError("mse: empty operands");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - y[i]) * (p[i] - y[i]);
  const double count = static_cast<double>(p.size());
  Var ins[] = {pred, target};
  return pred.tape->record(OpTag::mse, ins, Tensor::scalar(acc / count),
                           [count](Tape& t, const TapeNode& n) {
                             const Tensor& p = t.node(n.inputs[0]).value;
                             const Tensor& y = t.node(n.inputs[1]).value;
                             const double k = 2.0 * n.grad[0] / count;
                             if (Tensor* g = t.grad_target(n.inputs[0])) {
                               for (std::size_t i = 0; i < p.size(); ++i)
                                 (*g)[i] += k * (p[i] - y[i]);
                             }
                             if (Tensor* g = t.grad_target(n.inputs[1])) {
                               for (std::size_t i = 0; i < p.size(); ++i)
                                 (*g)[i] -= k * (p[i] - y[i]);
                             }
                           });
}

Var l2_norm(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v * v;
  const double norm = std::sqrt(acc);
  Var ins[] = {a};
  return a.tape->record(OpTag::l2_norm, ins, Tensor::scalar(norm), [](Tape& t, const TapeNode& n) {
    const double norm = n.value[0];
    if (norm == 0.0) return;
    if (Tensor* g = t.grad_target(n.inputs[0])) {
      const Tensor& x = t.node(n.inputs[0]).value;
      for (std::size_t i = 0; i < x.size(); ++i) (*g)[i] += n.grad[0] * x[i] / norm;
    }
  });
}

}  // namespace ad
}  // namespace socialprobe
