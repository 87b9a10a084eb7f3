#pragma once

// Two-stage enhancement: band merge -> CoarseNet -> band split -> mask X, then low-band refinement whose
// compensation (X_low times the second-stage mask) is added to the first-stage estimate. Offline and
// streaming use the same forward code; streaming passes one frame at a time with a ModelStreamState.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "thlnet/coarsenet.hpp"
#include "thlnet/config.hpp"
#include "thlnet/dsp.hpp"
#include "thlnet/finenet.hpp"
#include "thlnet/lcrb.hpp"
#include "thlnet/nn.hpp"

namespace thl {

struct StageOutputs {
  VarF compact_mask;  // [2, P, T] first-stage output before band splitting
  VarF m_c;           // [2, 256, T]
  VarF s_c;           // X * m_c
  VarF m_f;           // [2, Q, T] compensation mask (undefined without the second stage)
  VarF s_f;           // final estimate [2, 256, T]
};

struct ModelStreamState {
  CoarseStreamState coarse;
  FineStreamState fine;
};

class Thlnet {
 public:
  explicit Thlnet(const ModelConfig& cfg, std::uint64_t seed = 0);
  Thlnet(const Thlnet&) = delete;
  Thlnet& operator=(const Thlnet&) = delete;
  Thlnet(Thlnet&&) = default;
  Thlnet& operator=(Thlnet&&) = default;

  /// x [2, 256, T]. With `state`, x holds the next frames of a stream.
  StageOutputs forward(const VarF& x, ModelStreamState* state = nullptr) const;
  ModelStreamState initial_state() const;

  const ModelConfig& config() const noexcept { return cfg_; }
  nn::ParamRegistry& registry() noexcept { return reg_; }
  const nn::ParamRegistry& registry() const noexcept { return reg_; }
  const Lcrb& lcrb() const noexcept { return lcrb_; }
  const CoarseNet& coarse() const noexcept { return coarse_; }
  FineNet& fine() noexcept { return fine_; }

 private:
  ModelConfig cfg_;
  nn::ParamRegistry reg_;
  Lcrb lcrb_;
  CoarseNet coarse_;
  FineNet fine_;
};

/// stft -> forward -> istft, trimmed to the input length. Runs without recording a graph.
Waveform enhance_offline(const Thlnet& model, const Waveform& w);

/// Frame-synchronous enhancer. Each process() call takes one hop of input and returns one hop of output.
/// Output lags input by one hop: call k returns samples [hop*(k-1), hop*k) of the enhanced signal (call 0
/// returns zeros). Together with the analysis window this is one window (512 samples) of algorithmic latency.
class StreamingEnhancer {
 public:
  explicit StreamingEnhancer(const Thlnet& model);

  std::array<float, kHop> process(std::span<const float> hop);
  /// Feeds one hop of zeros, returning the last pending hop.
  std::array<float, kHop> flush();
  void reset();
  std::int64_t frames_processed() const noexcept { return frames_; }

 private:
  const Thlnet* model_;
  ModelStreamState state_;
  FrameTransform ft_;
  std::array<float, kHop> previous_{};
  std::array<float, kHop> tail_{};
  std::int64_t frames_ = 0;
};

/// Streams a whole signal through StreamingEnhancer and drops the one-hop lag, so the result is aligned with
/// enhance_offline() and has the input length.
Waveform enhance_streaming(const Thlnet& model, const Waveform& w);

}  // namespace thl
