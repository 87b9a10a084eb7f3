#pragma once

// Second stage: single-scale network over the low band. Input is the noisy and the first-stage-enhanced low
// band stacked as [4, Q, T]; output is the compensation mask [2, Q, T]. No frequency resampling anywhere.

#include <vector>

#include "thlnet/config.hpp"
#include "thlnet/nn.hpp"

namespace thl {

struct FineStreamState {
  std::vector<TensorF> enc_history;
  std::vector<TensorF> dec_history;
  std::vector<nn::RecurrentState> inter;
};

class FineNet {
 public:
  FineNet() = default;
  FineNet(nn::ParamRegistry& reg, const FineConfig& cfg);

  /// x_low, s_c_low [2, Q, T] -> mask [2, Q, T].
  VarF operator()(const VarF& x_low, const VarF& s_c_low, FineStreamState* state = nullptr) const;
  FineStreamState initial_state() const;

  /// When set, every intermediate activation shape is appended (for introspection in tests).
  void set_shape_trace(std::vector<Shape>* trace) noexcept { trace_ = trace; }

 private:
  struct ConvLayer {
    nn::Conv2d conv;
    nn::LayerNorm norm;
    nn::PRelu act;
  };
  struct DualPathBlock {
    nn::MultiHeadAttention attn;
    nn::LayerNorm attn_norm;
    nn::Gru ffn_fwd, ffn_bwd;
    nn::Linear ffn_proj;
    nn::LayerNorm ffn_norm;
    nn::Gru inter;
    nn::Linear inter_proj;
    nn::LayerNorm inter_norm;
  };

  VarF conv_layer(const ConvLayer& l, const VarF& x, TensorF* history) const;
  VarF dual_path(const DualPathBlock& b, const VarF& x, nn::RecurrentState* inter_state) const;
  void trace(const VarF& v) const {
    if (trace_) trace_->push_back(v.shape());
  }

  FineConfig cfg_;
  ConvLayer in_;
  std::vector<ConvLayer> enc_;
  std::vector<DualPathBlock> dp_;
  std::vector<ConvLayer> dec_;
  nn::Conv2d out_;
  std::vector<Shape>* trace_ = nullptr;
};

}  // namespace thl
