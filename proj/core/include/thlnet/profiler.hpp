#pragma once

// Analytic parameter and multiply-accumulate accounting, computed from a ModelConfig alone.
// Convention: 1 MAC = one multiply-accumulate, reported per second of 16 kHz audio (62.5 frames/s).
// Norms, activations and softmax are not counted. Transposed convolutions count Cin*Cout*kF*kT per input
// position. Frequency-axis attention counts its four projections plus L*L*D for scores and L*L*D for mixing.

#include <cstdint>
#include <string>
#include <vector>

#include "thlnet/config.hpp"
#include "thlnet/dsp.hpp"

namespace thl {

class Thlnet;

inline constexpr double kFramesPerSecond = static_cast<double>(kSampleRate) / kHop;

struct LayerProfile {
  std::string name;  // also the parameter-name prefix the row covers
  std::int64_t params = 0;
  std::int64_t macs_per_frame = 0;
  double macs_per_second = 0.0;
};

struct ProfileReport {
  std::vector<LayerProfile> layers;
  std::int64_t total_params = 0;
  double total_macs_per_second = 0.0;
  double frames_per_second = kFramesPerSecond;

  /// Sum over rows whose name starts with `prefix`.
  std::int64_t params_under(const std::string& prefix) const;
  double macs_per_second_under(const std::string& prefix) const;
};

ProfileReport profile_model(const ModelConfig& cfg);

/// Building blocks of the report, also usable on their own.
std::int64_t conv2d_params(std::int64_t cin, std::int64_t cout, std::int64_t kf, std::int64_t kt, bool bias = true);
std::int64_t conv2d_macs_per_frame(std::int64_t cin, std::int64_t cout, std::int64_t kf, std::int64_t kt,
                                   std::int64_t f_out, std::int64_t groups = 1);

/// Brute-force walk over the model's registered tensors.
std::int64_t count_params(const Thlnet& model);
/// Total MACs for `seconds` of audio.
double count_macs(const ModelConfig& cfg, double seconds = 1.0);

std::string report_json(const ProfileReport& r, int indent = 2);
std::string report_table(const ProfileReport& r);

}  // namespace thl
