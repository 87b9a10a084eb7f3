#pragma once

// Stage loss: alpha * L_RI + (1 - alpha) * L_Mag over [2, F, T] spectrograms.
//   L_RI  = sum over bins of (dr^2 + di^2) / (F*T)
//   L_Mag = mean over bins of (|est| - |tgt|)^2
// Total: L_c + lambda * L_f, both against the same clean target.

#include "thlnet/autograd.hpp"

namespace thl {

/// Added under the square root in the magnitude gradient only; the magnitude itself is exact.
inline constexpr double kMagnitudeEps = 1e-9;

struct LossConfig {
  double alpha = 0.5;
  double lambda = 1.0;

  void validate() const;
};

template <typename T>
Var<T> loss_ri(const Var<T>& est, const Var<T>& target);
template <typename T>
Var<T> loss_mag(const Var<T>& est, const Var<T>& target);
template <typename T>
Var<T> loss_stage(const Var<T>& est, const Var<T>& target, double alpha);

template <typename T>
struct LossTerms {
  Var<T> coarse;
  Var<T> fine;
  Var<T> total;
};

template <typename T>
LossTerms<T> loss_total(const Var<T>& s_c, const Var<T>& s_f, const Var<T>& target, const LossConfig& cfg);

}  // namespace thl
