#include "thlnet/nn.hpp"

#include <cmath>

namespace thl::nn {

VarF ParamRegistry::add(const std::string& name, TensorF init) {
  if (find(name)) throw ConfigError("parameter '" + name + "' registered twice");
  VarF v(std::move(init), true);
  entries_.emplace_back(name, v);
  return v;
}

VarF ParamRegistry::add_uniform(const std::string& name, Shape shape, std::int64_t fan_in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  return add(name, rng_.uniform_tensor<float>(std::move(shape), -bound, bound));
}

VarF ParamRegistry::add_constant(const std::string& name, Shape shape, float value) {
  return add(name, TensorF(std::move(shape), value));
}

std::vector<VarF> ParamRegistry::parameters() const {
  std::vector<VarF> out;
  out.reserve(entries_.size());
  for (const auto& [name, v] : entries_) out.push_back(v);
  return out;
}

std::int64_t ParamRegistry::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, v] : entries_) n += static_cast<std::int64_t>(v.numel());
  return n;
}

const VarF* ParamRegistry::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return &e.second;
  }
  return nullptr;
}

namespace {

// Concatenates the stored history with the new chunk along time, then keeps the trailing `ctx` frames.
VarF with_history(const VarF& x, TensorF* history, std::int64_t ctx) {
  VarF full = ops::concat<float>({VarF(*history), x}, 2);
  const std::int64_t t = full.dim(2);
  NoGradGuard no_grad;
  *history = ops::slice(VarF(full.value()), 2, t - ctx, t).value();
  return full;
}

}  // namespace

Conv2d::Conv2d(ParamRegistry& reg, const std::string& name, int cin, int cout, int kf, int kt,
               ops::Conv2dOptions opt)
    : cin_(cin), kt_(kt), opt_(opt) {
  opt_.causal = true;
  w_ = reg.add_uniform(name + ".weight", {cout, cin, kf, kt}, static_cast<std::int64_t>(cin) * kf * kt);
  b_ = reg.add_constant(name + ".bias", {cout}, 0.0f);
}

VarF Conv2d::operator()(const VarF& x, TensorF* history) const {
  if (!history || context() == 0) return ops::conv2d(x, w_, b_, opt_);
  auto opt = opt_;
  opt.causal = false;
  return ops::conv2d(with_history(x, history, context()), w_, b_, opt);
}

TensorF Conv2d::initial_history(std::int64_t freq) const { return TensorF({cin_, freq, context()}); }

ConvTranspose2d::ConvTranspose2d(ParamRegistry& reg, const std::string& name, int cin, int cout, int kf, int kt,
                                 ops::ConvTranspose2dOptions opt)
    : cin_(cin), kt_(kt), opt_(opt) {
  opt_.causal = true;
  w_ = reg.add_uniform(name + ".weight", {cin, cout, kf, kt}, static_cast<std::int64_t>(cin) * kf * kt);
  b_ = reg.add_constant(name + ".bias", {cout}, 0.0f);
}

VarF ConvTranspose2d::operator()(const VarF& x, TensorF* history) const {
  if (!history || context() == 0) return ops::conv_transpose2d(x, w_, b_, opt_);
  auto opt = opt_;
  opt.causal = false;
  return ops::conv_transpose2d(with_history(x, history, context()), w_, b_, opt);
}

TensorF ConvTranspose2d::initial_history(std::int64_t freq) const { return TensorF({cin_, freq, context()}); }

Linear::Linear(ParamRegistry& reg, const std::string& name, int din, int dout, bool bias) {
  w_ = reg.add_uniform(name + ".weight", {dout, din}, din);
  if (bias) b_ = reg.add_constant(name + ".bias", {dout}, 0.0f);
}

LayerNorm::LayerNorm(ParamRegistry& reg, const std::string& name, int size, int axis) : axis_(axis) {
  gamma_ = reg.add_constant(name + ".gamma", {size}, 1.0f);
  beta_ = reg.add_constant(name + ".beta", {size}, 0.0f);
}

PRelu::PRelu(ParamRegistry& reg, const std::string& name, int channels) {
  slope_ = reg.add_constant(name + ".slope", {channels}, 0.25f);
}

Lstm::Lstm(ParamRegistry& reg, const std::string& name, int din, int hidden, bool reverse)
    : hidden_(hidden), reverse_(reverse) {
  w_ih_ = reg.add_uniform(name + ".w_ih", {4 * hidden, din}, din);
  w_hh_ = reg.add_uniform(name + ".w_hh", {4 * hidden, hidden}, hidden);
  b_ = reg.add_constant(name + ".bias", {4 * hidden}, 0.0f);
}

VarF Lstm::operator()(const VarF& x, RecurrentState* state) const {
  if (!state) return ops::lstm(x, w_ih_, w_hh_, b_, reverse_).output;
  auto r = ops::lstm(x, w_ih_, w_hh_, b_, reverse_, &state->h, &state->c);
  state->h = std::move(r.final_h);
  state->c = std::move(r.final_c);
  return r.output;
}

RecurrentState Lstm::initial_state(std::int64_t batch) const {
  return {TensorF({batch, hidden_}), TensorF({batch, hidden_})};
}

Gru::Gru(ParamRegistry& reg, const std::string& name, int din, int hidden, bool reverse)
    : hidden_(hidden), reverse_(reverse) {
  w_ih_ = reg.add_uniform(name + ".w_ih", {3 * hidden, din}, din);
  w_hh_ = reg.add_uniform(name + ".w_hh", {3 * hidden, hidden}, hidden);
  b_ih_ = reg.add_constant(name + ".b_ih", {3 * hidden}, 0.0f);
  b_hh_ = reg.add_constant(name + ".b_hh", {3 * hidden}, 0.0f);
}

VarF Gru::operator()(const VarF& x, RecurrentState* state) const {
  if (!state) return ops::gru(x, w_ih_, w_hh_, b_ih_, b_hh_, reverse_).output;
  auto r = ops::gru(x, w_ih_, w_hh_, b_ih_, b_hh_, reverse_, &state->h);
  state->h = std::move(r.final_h);
  return r.output;
}

RecurrentState Gru::initial_state(std::int64_t batch) const { return {TensorF({batch, hidden_}), TensorF()}; }

MultiHeadAttention::MultiHeadAttention(ParamRegistry& reg, const std::string& name, int dim, int heads, bool causal,
                                       int context)
    : q_(reg, name + ".q", dim, dim),
      k_(reg, name + ".k", dim, dim),
      v_(reg, name + ".v", dim, dim),
      o_(reg, name + ".out", dim, dim) {
  opt_.heads = heads;
  opt_.causal = causal;
  opt_.context = context;
}

VarF MultiHeadAttention::operator()(const VarF& x) const {
  return o_(ops::attention(q_(x), k_(x), v_(x), opt_));
}

}  // namespace thl::nn
