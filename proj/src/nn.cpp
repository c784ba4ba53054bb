// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/nn.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "socialprobe/error.hpp"

namespace socialprobe {

Parameter& ParameterStore::add(std::string name, Tensor init) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(init)));
  return *params_.back();
}

Parameter& ParameterStore::get(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

const Parameter& ParameterStore::get(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

bool ParameterStore::contains(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return true;
  }
  return false;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
               Rng& rng, bool with_bias)
    : weight_(&store.add(name + ".weight", uniform_init(in, out, in, rng))) {
  if (with_bias) bias_ = &store.add(name + ".bias", uniform_init(1, out, in, rng));
}

ad::Var Linear::operator()(ad::Tape& tape, ad::Var x) const {
  ad::Var y = ad::matmul(x, tape.parameter(*weight_));
  if (bias_ != nullptr) y = ad::add_row(y, tape.parameter(*bias_));
  return y;
}

Mlp::Mlp(ParameterStore& store, const std::string& name, std::span<const std::size_t> widths,
         Rng& rng) {
  if (widths.size() < 2) throw ConfigError("Mlp '" + name + "' needs at least two widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
  }
}

ad::Var Mlp::operator()(ad::Tape& tape, ad::Var x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i](tape, x);
    if (i + 1 < layers_.size()) x = ad::relu(x);
  }
  return x;
}

Lstm::Lstm(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
           Rng& rng)
    : hidden_(hidden) {
  // Gate blocks along columns: input, forget, cell, output.
  input_weight_ = &store.add(name + ".w_input", uniform_init(in, 4 * hidden, in, rng));
  recurrent_weight_ =
      &store.add(name + ".w_recurrent", uniform_init(hidden, 4 * hidden, hidden, rng));
  bias_ = &store.add(name + ".bias", uniform_init(1, 4 * hidden, hidden, rng));
}

ad::Var Lstm::operator()(ad::Tape& tape, std::span<const Tensor> steps) const {
  if (steps.empty()) throw ShapeError("Lstm: empty sequence");
  const std::size_t rows = steps[0].rows();
  const std::size_t h = hidden_;
  ad::Var wx = tape.parameter(*input_weight_);
  ad::Var wh = tape.parameter(*recurrent_weight_);
  ad::Var b = tape.parameter(*bias_);

  ad::Var hidden = tape.constant(Tensor(rows, h));
  ad::Var cell = tape.constant(Tensor(rows, h));
  for (std::size_t t = 0; t < steps.size(); ++t) {
    ad::Var x = tape.constant(steps[t]);
    ad::Var pre = ad::matmul(x, wx);
    // h_0 = 0 contributes nothing on the first step.
    if (t > 0) pre = ad::add(pre, ad::matmul(hidden, wh));
    pre = ad::add_row(pre, b);
    ad::Var i = ad::sigmoid(ad::slice_cols(pre, 0, h));
    ad::Var f = ad::sigmoid(ad::slice_cols(pre, h, h));
    ad::Var g = ad::tanh(ad::slice_cols(pre, 2 * h, h));
    ad::Var o = ad::sigmoid(ad::slice_cols(pre, 3 * h, h));
    cell = t > 0 ? ad::add(ad::mul(f, cell), ad::mul(i, g)) : ad::mul(i, g);
    hidden = ad::mul(o, ad::tanh(cell));
  }
  return hidden;
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const Parameter* p : store.all()) {
    doc[p->name] = {{"shape", p->value.shape()},
                    {"values", std::vector<double>(p->value.values().begin(),
                                                   p->value.values().end())}};
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << doc.dump(1);
}

void load_checkpoint(ParameterStore& store, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  for (const auto& [name, entry] : doc.items()) {
    Parameter& p = store.get(name);
    auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    auto values = entry.at("values").get<std::vector<double>>();
    Tensor t(std::move(shape), std::move(values));
    if (!t.same_shape(p.value)) {
      throw ShapeError("checkpoint parameter '" + name + "' has shape " + t.shape_string() +
                       ", model expects " + p.value.shape_string());
    }
    p.value = std::move(t);
  }
}

}  // namespace socialprobe
