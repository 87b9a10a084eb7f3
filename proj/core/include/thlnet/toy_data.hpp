#pragma once

// Synthetic mixtures: harmonic-tone "speech" plus coloured or modulated noise at a random SNR.

#include <cstdint>
#include <vector>

#include "thlnet/dsp.hpp"

namespace thl {

struct ToyDataConfig {
  double duration_s = 4.0;
  double snr_min_db = -5.0;
  double snr_max_db = 20.0;
  int min_tones = 2;
  int max_tones = 5;
  float peak = 0.9f;  // joint peak normalization of clean + noise
};

struct ToyMixture {
  Waveform clean;
  Waveform noise;  // already scaled and normalized: mixture = clean + noise
  Waveform mixture;
  double snr_db = 0.0;
};

/// Deterministic in `seed`.
ToyMixture synthesize_mixture(std::uint64_t seed, const ToyDataConfig& cfg = {});
/// Same, with a fixed SNR instead of a random draw.
ToyMixture synthesize_mixture_at(std::uint64_t seed, double snr_db, const ToyDataConfig& cfg = {});
/// Item i uses derive_seed(seed, i).
std::vector<ToyMixture> synthesize_batch(std::uint64_t seed, int count, const ToyDataConfig& cfg = {});

/// 10 log10(P_signal / P_noise), in double.
double snr_db(const std::vector<float>& signal, const std::vector<float>& noise);

}  // namespace thl
