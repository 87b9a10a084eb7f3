#include <algorithm>
#include <limits>

#include "ops_common.hpp"

namespace thl::ops {

using detail::as_int;
using detail::gemm;

namespace {

// Visible key range [lo, hi) for query position i.
inline std::pair<std::int64_t, std::int64_t> visible(const AttentionOptions& opt, std::int64_t i, std::int64_t l) {
  if (!opt.causal) return {0, l};
  const std::int64_t hi = i + 1;
  const std::int64_t lo = opt.context > 0 ? std::max<std::int64_t>(0, hi - opt.context) : 0;
  return {lo, hi};
}

}  // namespace

template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionOptions& opt) {
  detail::require_rank("attention", q.shape(), 3);
  detail::require_same_shape("attention", q, k);
  detail::require_same_shape("attention", q, v);
  const std::int64_t n = q.dim(0), l = q.dim(1), d = q.dim(2);
  if (opt.heads < 1 || d % opt.heads != 0) {
    throw DimensionError("attention: feature size " + std::to_string(d) + " not divisible by heads " +
                         std::to_string(opt.heads));
  }
  const std::int64_t heads = opt.heads, dh = d / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  // Softmax probabilities [N, heads, L, L], kept for backward.
  auto probs = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n * heads * l * l));
  Tensor<T> out({n, l, d});
  for (std::int64_t b = 0; b < n; ++b) {
    const T* qb = q.value().data() + b * l * d;
    const T* kb = k.value().data() + b * l * d;
    const T* vb = v.value().data() + b * l * d;
    for (std::int64_t hd = 0; hd < heads; ++hd) {
      T* p = probs->data() + (b * heads + hd) * l * l;
      gemm(false, true, as_int(l), as_int(l), as_int(dh), inv_sqrt, qb + hd * dh, as_int(d), kb + hd * dh, as_int(d),
           T(0), p, as_int(l));
      for (std::int64_t i = 0; i < l; ++i) {
        T* row = p + i * l;
        const auto [lo, hi] = visible(opt, i, l);
        T mx = -std::numeric_limits<T>::infinity();
        for (std::int64_t j = lo; j < hi; ++j) mx = std::max(mx, row[j]);
        T z = 0;
        for (std::int64_t j = 0; j < l; ++j) {
          if (j < lo || j >= hi) {
            row[j] = T(0);
          } else {
            row[j] = std::exp(row[j] - mx);
            z += row[j];
          }
        }
        for (std::int64_t j = lo; j < hi; ++j) row[j] /= z;
      }
      gemm(false, false, as_int(l), as_int(dh), as_int(l), T(1), p, as_int(l), vb + hd * dh, as_int(d), T(0),
           out.data() + b * l * d + hd * dh, as_int(d));
    }
  }
  return make_result<T>("attention", std::move(out), {q, k, v}, [probs, n, l, d, heads, dh, inv_sqrt](Node<T>& self) {
    Node<T>& nq = *self.parents[0];
    Node<T>& nk = *self.parents[1];
    Node<T>& nv = *self.parents[2];
    Tensor<T> gq(nq.value.shape()), gk(nk.value.shape()), gv(nv.value.shape());
    std::vector<T> dp(static_cast<std::size_t>(l * l));
    for (std::int64_t b = 0; b < n; ++b) {
      const std::int64_t off = b * l * d;
      for (std::int64_t hd = 0; hd < heads; ++hd) {
        const T* p = probs->data() + (b * heads + hd) * l * l;
        const T* go = self.grad.data() + off + hd * dh;
        // dV = P^T dO
        gemm(true, false, as_int(l), as_int(dh), as_int(l), T(1), p, as_int(l), go, as_int(d), T(0),
             gv.data() + off + hd * dh, as_int(d));
        // dP = dO V^T, then softmax backward in place: dS = P * (dP - rowsum(dP * P))
        gemm(false, true, as_int(l), as_int(l), as_int(dh), T(1), go, as_int(d), nv.value.data() + off + hd * dh,
             as_int(d), T(0), dp.data(), as_int(l));
        for (std::int64_t i = 0; i < l; ++i) {
          T* row = dp.data() + i * l;
          const T* prow = p + i * l;
          T dot = 0;
          for (std::int64_t j = 0; j < l; ++j) dot += row[j] * prow[j];
          for (std::int64_t j = 0; j < l; ++j) row[j] = prow[j] * (row[j] - dot);
        }
        gemm(false, false, as_int(l), as_int(dh), as_int(l), inv_sqrt, dp.data(), as_int(l),
             nk.value.data() + off + hd * dh, as_int(d), T(0), gq.data() + off + hd * dh, as_int(d));
        gemm(true, false, as_int(l), as_int(dh), as_int(l), inv_sqrt, dp.data(), as_int(l),
             nq.value.data() + off + hd * dh, as_int(d), T(0), gk.data() + off + hd * dh, as_int(d));
      }
    }
    accumulate_grad(nq, gq);
    accumulate_grad(nk, gk);
    accumulate_grad(nv, gv);
  });
}

template Var<float> attention(const Var<float>&, const Var<float>&, const Var<float>&, const AttentionOptions&);
template Var<double> attention(const Var<double>&, const Var<double>&, const Var<double>&, const AttentionOptions&);

}  // namespace thl::ops
