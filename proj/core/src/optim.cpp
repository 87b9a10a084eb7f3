#include "thlnet/optim.hpp"

#include <cmath>

namespace thl {

Adam::Adam(std::vector<VarF> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void Adam::step() {
  ++step_count_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  const float step_size = static_cast<float>(options_.lr / c1);
  const float inv_c2_sqrt = static_cast<float>(1.0 / std::sqrt(c2));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (p.shape() != m_[i].shape()) {
      throw DimensionError("adam: parameter " + std::to_string(i) + " changed shape to " + shape_str(p.shape()));
    }
    if (!p.has_grad()) {
      // Zero gradient still decays the moments.
      for (std::size_t k = 0; k < m_[i].numel(); ++k) {
        m_[i][k] *= options_.beta1;
        v_[i][k] *= options_.beta2;
      }
      continue;
    }
    const float* g = p.grad().data();
    float* w = p.mutable_value().data();
    float* m = m_[i].data();
    float* v = v_[i].data();
    for (std::size_t k = 0; k < m_[i].numel(); ++k) {
      m[k] = options_.beta1 * m[k] + (1.0f - options_.beta1) * g[k];
      v[k] = options_.beta2 * v[k] + (1.0f - options_.beta2) * g[k] * g[k];
      w[k] -= step_size * m[k] / (std::sqrt(v[k]) * inv_c2_sqrt + options_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double global_grad_norm(const std::vector<VarF>& params) {
  double acc = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (float g : p.grad().values()) acc += static_cast<double>(g) * g;
  }
  return std::sqrt(acc);
}

double clip_global_norm(std::vector<VarF>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const float s = static_cast<float>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (float& g : p.mutable_grad().values()) g *= s;
    }
  }
  return norm;
}

double lr_schedule(double initial_lr, std::int64_t epoch, double decay, std::int64_t period) {
  if (epoch < 0) throw ConfigError("lr_schedule: epoch must be >= 0");
  return initial_lr * std::pow(decay, static_cast<double>(epoch / period));
}

}  // namespace thl
