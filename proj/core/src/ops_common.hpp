#pragma once

#include <bit>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "blas.hpp"
#include "thlnet/ops.hpp"

namespace thl::ops::detail {

using thl::detail::gemm;

template <typename T>
void require_same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

inline void require_rank(const char* op, const Shape& s, int rank) {
  if (static_cast<int>(s.size()) != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(s));
  }
}

template <typename T>
T sigmoid_scalar(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Branch-free exp for float, written so loops over it vectorize. Max relative error about 2 ulp.
inline float exp_vec(float x) {
  x = std::min(std::max(x, -87.0f), 88.0f);
  const float magic = 12582912.0f;  // 1.5 * 2^23, rounds to nearest integer
  const float kf = (x * 1.44269504f + magic) - magic;
  const float r = (x - kf * 0.693359375f) + kf * 2.12194440e-4f;
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  p = p * r * r + r + 1.0f;
  const std::int32_t k = static_cast<std::int32_t>(kf);
  return p * std::bit_cast<float>((k + 127) << 23);
}

// In-place gate nonlinearities. float takes the vectorizable path, double stays on libm
// so finite-difference checks see the exact functions.
inline void sigmoid_inplace(float* p, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) p[i] = 1.0f / (1.0f + exp_vec(-p[i]));
}
inline void sigmoid_inplace(double* p, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) p[i] = sigmoid_scalar(p[i]);
}
inline void tanh_inplace(float* p, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) {
    const float a = std::min(std::fabs(p[i]), 20.0f);
    const float e = exp_vec(-2.0f * a);
    const float t = (1.0f - e) / (1.0f + e);
    p[i] = std::copysign(t, p[i]);
  }
}
inline void tanh_inplace(double* p, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) p[i] = std::tanh(p[i]);
}

inline int as_int(std::int64_t v) { return static_cast<int>(v); }

}  // namespace thl::ops::detail
