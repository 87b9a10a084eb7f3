#include "thlnet/dsp.hpp"

#include "thlnet/ops.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace thl {

namespace {

// FFTW's planner is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Plans {
  fftwf_plan forward = nullptr;
  fftwf_plan inverse = nullptr;
};

const Plans& shared_plans() {
  static const Plans plans = [] {
    std::lock_guard lock(planner_mutex());
    std::vector<float> real(kFftSize);
    std::vector<fftwf_complex> spec(kFftSize / 2 + 1);
    Plans p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.forward = fftwf_plan_dft_r2c_1d(kFftSize, real.data(), spec.data(), flags);
    p.inverse = fftwf_plan_dft_c2r_1d(kFftSize, spec.data(), real.data(), flags | FFTW_DESTROY_INPUT);
    return p;
  }();
  return plans;
}

}  // namespace

const std::vector<float>& hann_window() {
  static const std::vector<float> w = [] {
    std::vector<float> v(kFftSize);
    for (int n = 0; n < kFftSize; ++n) {
      v[n] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kFftSize));
    }
    return v;
  }();
  return w;
}

struct FrameTransform::Impl {
  std::vector<float> real = std::vector<float>(kFftSize);
  std::vector<fftwf_complex> spec = std::vector<fftwf_complex>(kFftSize / 2 + 1);
};

FrameTransform::FrameTransform() : impl_(std::make_unique<Impl>()) {}
FrameTransform::~FrameTransform() = default;
FrameTransform::FrameTransform(FrameTransform&&) noexcept = default;
FrameTransform& FrameTransform::operator=(FrameTransform&&) noexcept = default;

void FrameTransform::analyze(std::span<const float> frame, std::span<float> re, std::span<float> im) {
  const auto& w = hann_window();
  for (int n = 0; n < kFftSize; ++n) impl_->real[n] = frame[n] * w[n];
  fftwf_execute_dft_r2c(shared_plans().forward, impl_->real.data(), impl_->spec.data());
  for (int k = 0; k < kBins; ++k) {
    re[k] = impl_->spec[k + 1][0];
    im[k] = impl_->spec[k + 1][1];
  }
}

void FrameTransform::synthesize(std::span<const float> re, std::span<const float> im, std::span<float> frame) {
  impl_->spec[0][0] = 0.0f;
  impl_->spec[0][1] = 0.0f;
  for (int k = 0; k < kBins; ++k) {
    impl_->spec[k + 1][0] = re[k];
    impl_->spec[k + 1][1] = im[k];
  }
  impl_->spec[kBins][1] = 0.0f;  // Nyquist of a real frame has no imaginary part
  fftwf_execute_dft_c2r(shared_plans().inverse, impl_->spec.data(), impl_->real.data());
  const auto& w = hann_window();
  const float scale = 1.0f / kFftSize;
  for (int n = 0; n < kFftSize; ++n) frame[n] = impl_->real[n] * scale * w[n];
}

std::int64_t stft_frame_count(std::size_t length) {
  return static_cast<std::int64_t>((length + kHop - 1) / kHop) + 1;
}

ComplexSpectrogram stft(std::span<const float> samples) {
  if (samples.size() < static_cast<std::size_t>(kFftSize)) {
    throw DimensionError("stft: input has " + std::to_string(samples.size()) + " samples, need at least " +
                         std::to_string(kFftSize));
  }
  const std::int64_t frames = stft_frame_count(samples.size());
  // Padded signal: one hop of zeros, the samples, zeros up to frames*hop + hop.
  std::vector<float> padded(static_cast<std::size_t>((frames + 1) * kHop), 0.0f);
  std::copy(samples.begin(), samples.end(), padded.begin() + kHop);
  ComplexSpectrogram out{TensorF({2, kBins, frames})};
  FrameTransform ft;
  std::vector<float> re(kBins), im(kBins);
  for (std::int64_t t = 0; t < frames; ++t) {
    ft.analyze(std::span<const float>(padded.data() + t * kHop, kFftSize), re, im);
    for (int k = 0; k < kBins; ++k) {
      out.data.at(0, k, t) = re[k];
      out.data.at(1, k, t) = im[k];
    }
  }
  return out;
}

Waveform istft(const ComplexSpectrogram& s, std::size_t out_len) {
  if (s.data.rank() != 3 || s.data.dim(0) != 2 || s.data.dim(1) != kBins) {
    throw DimensionError("istft: expected [2x" + std::to_string(kBins) + "xT] spectrogram, got " +
                         shape_str(s.data.shape()));
  }
  const std::int64_t frames = s.frames();
  const std::size_t padded_len = static_cast<std::size_t>((frames + 1) * kHop);
  if (out_len + kHop > padded_len) {
    throw DimensionError("istft: " + std::to_string(frames) + " frames cannot produce " + std::to_string(out_len) +
                         " samples");
  }
  std::vector<float> acc(padded_len, 0.0f), wsum(padded_len, 0.0f);
  const auto& w = hann_window();
  FrameTransform ft;
  std::vector<float> re(kBins), im(kBins), frame(kFftSize);
  for (std::int64_t t = 0; t < frames; ++t) {
    for (int k = 0; k < kBins; ++k) {
      re[k] = s.data.at(0, k, t);
      im[k] = s.data.at(1, k, t);
    }
    ft.synthesize(re, im, frame);
    const std::size_t off = static_cast<std::size_t>(t * kHop);
    for (int n = 0; n < kFftSize; ++n) {
      acc[off + n] += frame[n];
      wsum[off + n] += w[n] * w[n];
    }
  }
  Waveform out;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const float ws = wsum[i + kHop];
    out.samples[i] = ws > 1e-6f ? acc[i + kHop] / ws : 0.0f;
  }
  return out;
}

ComplexSpectrogram apply_complex_mask(const ComplexSpectrogram& x, const ComplexMask& m) {
  NoGradGuard no_grad;
  return {ops::complex_mul(VarF(x.data), VarF(m.data)).value()};
}

}  // namespace thl
