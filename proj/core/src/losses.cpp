#include "thlnet/losses.hpp"

#include "thlnet/ops.hpp"

namespace thl {

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("loss: alpha must be in [0, 1]");
  if (!(lambda >= 0.0)) throw ConfigError("loss: lambda must be >= 0");
}

namespace {

template <typename T>
void require_pair(const Var<T>& est, const Var<T>& target, const char* what) {
  if (est.shape() != target.shape()) {
    throw DimensionError(std::string(what) + ": estimate " + shape_str(est.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  if (est.shape().empty() || est.dim(0) != 2) {
    throw DimensionError(std::string(what) + ": expected a [2, ...] real/imag grid, got " + shape_str(est.shape()));
  }
}

}  // namespace

template <typename T>
Var<T> loss_ri(const Var<T>& est, const Var<T>& target) {
  require_pair(est, target, "loss_ri");
  const T bins = static_cast<T>(est.numel() / 2);
  return ops::scale(ops::sum(ops::square(ops::sub(est, target))), T(1) / bins);
}

template <typename T>
Var<T> loss_mag(const Var<T>& est, const Var<T>& target) {
  require_pair(est, target, "loss_mag");
  const T eps = static_cast<T>(kMagnitudeEps);
  return ops::mean(ops::square(ops::sub(ops::complex_abs(est, eps), ops::complex_abs(target, eps))));
}

template <typename T>
Var<T> loss_stage(const Var<T>& est, const Var<T>& target, double alpha) {
  const T a = static_cast<T>(alpha);
  return ops::add(ops::scale(loss_ri(est, target), a), ops::scale(loss_mag(est, target), T(1) - a));
}

template <typename T>
LossTerms<T> loss_total(const Var<T>& s_c, const Var<T>& s_f, const Var<T>& target, const LossConfig& cfg) {
  cfg.validate();
  LossTerms<T> out;
  out.coarse = loss_stage(s_c, target, cfg.alpha);
  out.fine = loss_stage(s_f, target, cfg.alpha);
  out.total = ops::add(out.coarse, ops::scale(out.fine, static_cast<T>(cfg.lambda)));
  return out;
}

#define THL_INSTANTIATE(T)                                                              \
  template Var<T> loss_ri(const Var<T>&, const Var<T>&);                                \
  template Var<T> loss_mag(const Var<T>&, const Var<T>&);                               \
  template Var<T> loss_stage(const Var<T>&, const Var<T>&, double);                     \
  template LossTerms<T> loss_total(const Var<T>&, const Var<T>&, const Var<T>&, const LossConfig&);

THL_INSTANTIATE(float)
THL_INSTANTIATE(double)
#undef THL_INSTANTIATE

}  // namespace thl
