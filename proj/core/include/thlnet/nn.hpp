#pragma once

// Parameterized layers built on thl::ops. Every layer registers its tensors in a
// ParamRegistry under a dotted name; the registry order is the checkpoint order.
// Layers that look back in time take an optional history/state pointer: null runs
// the whole sequence causally, non-null runs a streaming chunk and updates the state.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "thlnet/ops.hpp"
#include "thlnet/random.hpp"

namespace thl::nn {

class ParamRegistry {
 public:
  explicit ParamRegistry(std::uint64_t seed = 0) : rng_(seed) {}

  VarF add(const std::string& name, TensorF init);
  /// Uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)].
  VarF add_uniform(const std::string& name, Shape shape, std::int64_t fan_in);
  VarF add_constant(const std::string& name, Shape shape, float value);

  const std::vector<std::pair<std::string, VarF>>& entries() const noexcept { return entries_; }
  std::vector<VarF> parameters() const;
  std::int64_t parameter_count() const;
  const VarF* find(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, VarF>> entries_;
  Rng rng_;
};

struct RecurrentState {
  TensorF h;
  TensorF c;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamRegistry& reg, const std::string& name, int cin, int cout, int kf, int kt,
         ops::Conv2dOptions opt = {});

  VarF operator()(const VarF& x, TensorF* history = nullptr) const;
  /// Zero history for streaming: [cin, F, context].
  TensorF initial_history(std::int64_t freq) const;
  std::int64_t context() const noexcept { return static_cast<std::int64_t>(kt_ - 1) * opt_.dilation_t; }
  const ops::Conv2dOptions& options() const noexcept { return opt_; }
  const VarF& weight() const noexcept { return w_; }
  const VarF& bias() const noexcept { return b_; }

 private:
  VarF w_, b_;
  int cin_ = 0, kt_ = 1;
  ops::Conv2dOptions opt_;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(ParamRegistry& reg, const std::string& name, int cin, int cout, int kf, int kt,
                  ops::ConvTranspose2dOptions opt = {});

  VarF operator()(const VarF& x, TensorF* history = nullptr) const;
  TensorF initial_history(std::int64_t freq) const;
  std::int64_t context() const noexcept { return static_cast<std::int64_t>(kt_ - 1) * opt_.dilation_t; }

 private:
  VarF w_, b_;
  int cin_ = 0, kt_ = 1;
  ops::ConvTranspose2dOptions opt_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamRegistry& reg, const std::string& name, int din, int dout, bool bias = true);
  VarF operator()(const VarF& x) const { return ops::linear(x, w_, b_); }

 private:
  VarF w_, b_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamRegistry& reg, const std::string& name, int size, int axis);
  VarF operator()(const VarF& x) const { return ops::layer_norm(x, gamma_, beta_, axis_); }

 private:
  VarF gamma_, beta_;
  int axis_ = 0;
};

class PRelu {
 public:
  PRelu() = default;
  PRelu(ParamRegistry& reg, const std::string& name, int channels);
  VarF operator()(const VarF& x) const { return ops::prelu(x, slope_); }

 private:
  VarF slope_;
};

class Lstm {
 public:
  Lstm() = default;
  Lstm(ParamRegistry& reg, const std::string& name, int din, int hidden, bool reverse = false);
  /// x [N, L, D] -> [N, L, H]. With `state`, starts from and updates it.
  VarF operator()(const VarF& x, RecurrentState* state = nullptr) const;
  RecurrentState initial_state(std::int64_t batch) const;
  int hidden() const noexcept { return hidden_; }

 private:
  VarF w_ih_, w_hh_, b_;
  int hidden_ = 0;
  bool reverse_ = false;
};

class Gru {
 public:
  Gru() = default;
  Gru(ParamRegistry& reg, const std::string& name, int din, int hidden, bool reverse = false);
  VarF operator()(const VarF& x, RecurrentState* state = nullptr) const;
  RecurrentState initial_state(std::int64_t batch) const;
  int hidden() const noexcept { return hidden_; }

 private:
  VarF w_ih_, w_hh_, b_ih_, b_hh_;
  int hidden_ = 0;
  bool reverse_ = false;
};

/// Self-attention with input/output projections over x [N, L, D].
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamRegistry& reg, const std::string& name, int dim, int heads, bool causal = false,
                     int context = 0);
  VarF operator()(const VarF& x) const;

 private:
  Linear q_, k_, v_, o_;
  ops::AttentionOptions opt_;
};

}  // namespace thl::nn
