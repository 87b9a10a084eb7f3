#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "thlnet/autograd.hpp"
#include "thlnet/random.hpp"

namespace thl::test {

inline TensorF random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return rng.uniform_tensor<float>(std::move(shape), lo, hi);
}

inline TensorD random_tensor_d(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return rng.uniform_tensor<double>(std::move(shape), lo, hi);
}

// Sum of 200 random sinusoids between 100 Hz and 8 kHz with 16 ms raised-cosine fades, peak 0.9.
// Nothing falls in the band of the dropped DC bin, so the analysis/synthesis pair can reconstruct it.
inline std::vector<float> dc_free_signal(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> x(n, 0.0);
  for (int k = 0; k < 200; ++k) {
    const double w = 2.0 * std::numbers::pi * rng.uniform(100.0, 8000.0) / 16000.0;
    const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi), a = rng.uniform(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(w * static_cast<double>(i) + ph);
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const std::size_t fade = 256;
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t edge = std::min(i, n - 1 - i);
    const double g = edge < fade ? 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / fade) : 1.0;
    out[i] = static_cast<float>(0.9 * g * x[i] / peak);
  }
  return out;
}

inline double snr_db(const std::vector<float>& ref, const std::vector<float>& est) {
  double s = 0.0, e = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = static_cast<double>(ref[i]) - est[i];
    s += static_cast<double>(ref[i]) * ref[i];
    e += d * d;
  }
  return 10.0 * std::log10(s / e);
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

template <typename T>
bool bit_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && a.storage() == b.storage();
}

// Elements of a [C, F, T] tensor with time index < t_end.
template <typename T>
bool prefix_equal(const Tensor<T>& a, const Tensor<T>& b, std::int64_t t_end) {
  const std::int64_t c = a.dim(0), f = a.dim(1);
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < f; ++j)
      for (std::int64_t k = 0; k < t_end; ++k)
        if (a.at(i, j, k) != b.at(i, j, k)) return false;
  return true;
}

}  // namespace thl::test
