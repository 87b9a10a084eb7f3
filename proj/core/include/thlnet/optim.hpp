#pragma once

#include <cstdint>
#include <vector>

#include "thlnet/autograd.hpp"

namespace thl {

struct AdamOptions {
  float lr = 4e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

/// Adam with bias correction. Moment buffers are created to match each parameter at construction.
class Adam {
 public:
  Adam(std::vector<VarF> params, AdamOptions options = {});

  /// Applies one update from the parameters' current grads. Parameters without a grad buffer
  /// are treated as having zero gradient.
  void step();
  void zero_grad();

  void set_lr(float lr) noexcept { options_.lr = lr; }
  float lr() const noexcept { return options_.lr; }
  std::int64_t step_count() const noexcept { return step_count_; }
  const AdamOptions& options() const noexcept { return options_; }
  const std::vector<TensorF>& first_moment() const noexcept { return m_; }
  const std::vector<TensorF>& second_moment() const noexcept { return v_; }

 private:
  std::vector<VarF> params_;
  AdamOptions options_;
  std::vector<TensorF> m_;
  std::vector<TensorF> v_;
  std::int64_t step_count_ = 0;
};

/// Scales all grads by max_norm/norm when their global L2 norm exceeds max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::vector<VarF>& params, double max_norm = 5.0);

/// Global L2 norm over the grads of `params` (missing grads count as zero).
double global_grad_norm(const std::vector<VarF>& params);

/// initial_lr * decay^floor(epoch / period).
double lr_schedule(double initial_lr, std::int64_t epoch, double decay = 0.98, std::int64_t period = 2);

}  // namespace thl
