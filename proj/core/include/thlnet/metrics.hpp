#pragma once

#include <span>

namespace thl {

inline constexpr double kSiSdrEps = 1e-12;

/// Scale-invariant SDR in dB: target = (<est, ref> / |ref|^2) ref, error = est - target,
/// 10 log10(|target|^2 / (|error|^2 + eps)). Accumulates in double. Throws on length mismatch or zero ref.
double si_sdr(std::span<const float> est, std::span<const float> ref);

}  // namespace thl
