#include "thlnet/metrics.hpp"

#include <cmath>
#include <string>

#include "thlnet/error.hpp"

namespace thl {

double si_sdr(std::span<const float> est, std::span<const float> ref) {
  if (est.size() != ref.size()) {
    throw DimensionError("si_sdr: length mismatch " + std::to_string(est.size()) + " vs " +
                         std::to_string(ref.size()));
  }
  double dot = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += static_cast<double>(est[i]) * ref[i];
    rr += static_cast<double>(ref[i]) * ref[i];
  }
  if (rr == 0.0) throw ConfigError("si_sdr: reference signal is all zeros");
  const double a = dot / rr;
  double st = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = a * ref[i];
    const double e = est[i] - t;
    st += t * t;
    ee += e * e;
  }
  return 10.0 * std::log10(st / (ee + kSiSdrEps));
}

}  // namespace thl
