#include "thlnet/model.hpp"

#include "thlnet/error.hpp"

namespace thl {

Thlnet::Thlnet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), reg_(seed) {
  cfg_.validate();
  if (cfg_.coarse.enabled) {
    lcrb_ = Lcrb(reg_, cfg_.lcrb, kBins);
    coarse_ = CoarseNet(reg_, cfg_.coarse, cfg_.lcrb.bands);
  }
  if (cfg_.fine.enabled) fine_ = FineNet(reg_, cfg_.fine);
}

StageOutputs Thlnet::forward(const VarF& x, ModelStreamState* state) const {
  if (x.shape().size() != 3 || x.dim(0) != 2 || x.dim(1) != kBins) {
    throw DimensionError("thlnet: expected [2x" + std::to_string(kBins) + "xT] spectrogram, got " +
                         shape_str(x.shape()));
  }
  StageOutputs out;
  if (!cfg_.coarse.enabled) {
    out.s_c = x;
    out.s_f = x;
    return out;
  }
  out.compact_mask = coarse_(lcrb_.merge(x), state ? &state->coarse : nullptr);
  out.m_c = lcrb_.split(out.compact_mask);
  out.s_c = ops::complex_mul(x, out.m_c);
  if (!cfg_.fine.enabled) {
    out.s_f = out.s_c;
    return out;
  }
  const std::int64_t q = cfg_.fine.low_bins;
  const VarF x_low = ops::slice(x, 1, 0, q);
  const VarF s_c_low = ops::slice(out.s_c, 1, 0, q);
  out.m_f = fine_(x_low, s_c_low, state ? &state->fine : nullptr);
  const VarF low = ops::add(s_c_low, ops::complex_mul(x_low, out.m_f));
  out.s_f = q == kBins ? low : ops::concat<float>({low, ops::slice(out.s_c, 1, q, kBins)}, 1);
  return out;
}

ModelStreamState Thlnet::initial_state() const {
  ModelStreamState s;
  if (cfg_.coarse.enabled) s.coarse = coarse_.initial_state();
  if (cfg_.fine.enabled) s.fine = fine_.initial_state();
  return s;
}

Waveform enhance_offline(const Thlnet& model, const Waveform& w) {
  NoGradGuard no_grad;
  const ComplexSpectrogram x = stft(w);
  const StageOutputs o = model.forward(VarF(x.data));
  return istft(ComplexSpectrogram{o.s_f.value()}, w.size());
}

StreamingEnhancer::StreamingEnhancer(const Thlnet& model) : model_(&model), state_(model.initial_state()) {}

std::array<float, kHop> StreamingEnhancer::process(std::span<const float> hop) {
  if (hop.size() != static_cast<std::size_t>(kHop)) {
    throw DimensionError("stream: expected " + std::to_string(kHop) + " samples per call, got " +
                         std::to_string(hop.size()));
  }
  std::array<float, kFftSize> frame;
  std::copy(previous_.begin(), previous_.end(), frame.begin());
  std::copy(hop.begin(), hop.end(), frame.begin() + kHop);
  std::copy(hop.begin(), hop.end(), previous_.begin());

  TensorF spec({2, kBins, 1});
  ft_.analyze(frame, std::span<float>(spec.data(), kBins), std::span<float>(spec.data() + kBins, kBins));
  TensorF enhanced;
  {
    NoGradGuard no_grad;
    enhanced = model_->forward(VarF(std::move(spec)), &state_).s_f.value();
  }
  ft_.synthesize(std::span<const float>(enhanced.data(), kBins),
                 std::span<const float>(enhanced.data() + kBins, kBins), frame);

  std::array<float, kHop> out{};
  const auto& w = hann_window();
  if (frames_ > 0) {
    for (int n = 0; n < kHop; ++n) {
      out[n] = (tail_[n] + frame[n]) / (w[n] * w[n] + w[n + kHop] * w[n + kHop]);
    }
  }
  std::copy(frame.begin() + kHop, frame.end(), tail_.begin());
  ++frames_;
  return out;
}

std::array<float, kHop> StreamingEnhancer::flush() {
  const std::array<float, kHop> zeros{};
  return process(zeros);
}

void StreamingEnhancer::reset() {
  state_ = model_->initial_state();
  previous_.fill(0.0f);
  tail_.fill(0.0f);
  frames_ = 0;
}

Waveform enhance_streaming(const Thlnet& model, const Waveform& w) {
  if (w.size() < static_cast<std::size_t>(kFftSize)) {
    throw DimensionError("enhance: input has " + std::to_string(w.size()) + " samples, need at least " +
                         std::to_string(kFftSize));
  }
  StreamingEnhancer se(model);
  const std::size_t hops = (w.size() + kHop - 1) / kHop;
  std::vector<float> padded(hops * kHop, 0.0f);
  std::copy(w.samples.begin(), w.samples.end(), padded.begin());
  Waveform out;
  out.samples.reserve(padded.size() + kHop);
  for (std::size_t h = 0; h < hops; ++h) {
    const auto y = se.process(std::span<const float>(padded.data() + h * kHop, kHop));
    if (h > 0) out.samples.insert(out.samples.end(), y.begin(), y.end());
  }
  const auto last = se.flush();
  out.samples.insert(out.samples.end(), last.begin(), last.end());
  out.samples.resize(w.size());
  return out;
}

}  // namespace thl
