#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "thlnet/tensor.hpp"

namespace thl {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFftSize = 512;  // 32 ms at 16 kHz
inline constexpr int kHop = 256;      // 50% overlap
inline constexpr int kBins = 256;     // bins 1..256 of the 257-bin half spectrum (DC dropped)

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Real/imag grid [2, F, T]: channel 0 real, channel 1 imaginary.
struct ComplexSpectrogram {
  TensorF data;

  std::int64_t bins() const { return data.dim(1); }
  std::int64_t frames() const { return data.dim(2); }
};

/// Multiplicative complex mask with the same [2, F, T] layout.
struct ComplexMask {
  TensorF data;
};

/// Number of analysis frames for a signal of `length` samples.
/// The signal is preceded by one hop of zeros and zero-padded at the end so that every
/// sample lies under exactly two frames: ceil(length / hop) + 1.
std::int64_t stft_frame_count(std::size_t length);

/// Periodic Hann window of length kFftSize.
const std::vector<float>& hann_window();

/// Causal STFT. Frame t covers samples [hop*(t-1), hop*(t+1)). Throws DimensionError for inputs shorter than
/// one window.
ComplexSpectrogram stft(std::span<const float> samples);
inline ComplexSpectrogram stft(const Waveform& w) { return stft(std::span<const float>(w.samples)); }

/// Weighted overlap-add inverse of stft(), normalized by the summed squared window, trimmed to out_len.
Waveform istft(const ComplexSpectrogram& s, std::size_t out_len);

ComplexSpectrogram apply_complex_mask(const ComplexSpectrogram& x, const ComplexMask& m);

/// One-frame analysis/synthesis engine shared by the offline and streaming paths.
class FrameTransform {
 public:
  FrameTransform();
  ~FrameTransform();
  FrameTransform(const FrameTransform&) = delete;
  FrameTransform& operator=(const FrameTransform&) = delete;
  FrameTransform(FrameTransform&&) noexcept;
  FrameTransform& operator=(FrameTransform&&) noexcept;

  /// Windows a 512-sample frame and writes bins 1..256 into re/im.
  void analyze(std::span<const float> frame, std::span<float> re, std::span<float> im);
  /// Inverse of analyze(): DC set to zero, inverse FFT, synthesis window applied. Writes 512 samples.
  void synthesize(std::span<const float> re, std::span<const float> im, std::span<float> frame);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace thl
