#pragma once

// First stage: U-shaped encoder / dual-path recurrent bottleneck / decoder over compact [2, P, T] features.
// Predicts the band-scale complex mask. Causal along time; the intra (frequency) recurrence is bidirectional.

#include <vector>

#include "thlnet/config.hpp"
#include "thlnet/nn.hpp"

namespace thl {

struct CoarseStreamState {
  std::vector<TensorF> enc_history;
  std::vector<TensorF> dec_history;
  std::vector<nn::RecurrentState> inter;
};

class CoarseNet {
 public:
  CoarseNet() = default;
  CoarseNet(nn::ParamRegistry& reg, const CoarseConfig& cfg, int bands);

  /// [2, P, T] -> mask [2, P, T]. With `state`, treats x as the next chunk of a stream.
  VarF operator()(const VarF& x, CoarseStreamState* state = nullptr) const;
  CoarseStreamState initial_state() const;

  /// Frequency size entering each encoder layer, plus the bottleneck size last.
  const std::vector<int>& freq_sizes() const noexcept { return freq_; }

 private:
  struct EncoderLayer {
    nn::Conv2d conv;
    nn::LayerNorm norm;
    nn::PRelu act;
  };
  struct DecoderLayer {
    nn::ConvTranspose2d conv;
    nn::LayerNorm norm;
    nn::PRelu act;
  };
  struct DualPathBlock {
    nn::Lstm intra_fwd, intra_bwd;
    nn::Linear intra_proj;
    nn::LayerNorm intra_norm;
    nn::Lstm inter;
    nn::Linear inter_proj;
    nn::LayerNorm inter_norm;
  };

  VarF dual_path(const DualPathBlock& b, const VarF& x, nn::RecurrentState* inter_state) const;

  CoarseConfig cfg_;
  std::vector<int> freq_;
  std::vector<EncoderLayer> enc_;
  std::vector<DualPathBlock> dp_;
  std::vector<DecoderLayer> dec_;  // dec_[i] mirrors enc_[i]
  nn::Conv2d out_;
};

}  // namespace thl
