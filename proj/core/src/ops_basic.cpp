#include <algorithm>
#include <numeric>

#include "ops_common.hpp"

namespace thl::ops {

using detail::require_same_shape;

namespace {

template <typename T, typename Fwd, typename Bwd>
Var<T> unary(const char* name, const Var<T>& a, Fwd fwd, Bwd bwd_scale) {
  Tensor<T> out(a.shape());
  const T* x = a.value().data();
  T* y = out.data();
  for (std::size_t i = 0; i < out.numel(); ++i) y[i] = fwd(x[i]);
  return make_result<T>(name, std::move(out), {a}, [bwd_scale](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Tensor<T> g(in.value.shape());
    const T* x = in.value.data();
    const T* y = self.value.data();
    const T* gy = self.grad.data();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = gy[i] * bwd_scale(x[i], y[i]);
    accumulate_grad(in, g);
  });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>("add", std::move(out), {a, b}, [](Node<T>& self) {
    accumulate_grad(*self.parents[0], self.grad);
    accumulate_grad(*self.parents[1], self.grad);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result<T>("sub", std::move(out), {a, b}, [](Node<T>& self) {
    accumulate_grad(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      Tensor<T> g(self.grad.shape());
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] = -self.grad[i];
      accumulate_grad(*self.parents[1], g);
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>("mul", std::move(out), {a, b}, [](Node<T>& self) {
    Node<T>& na = *self.parents[0];
    Node<T>& nb = *self.parents[1];
    Tensor<T> g(self.grad.shape());
    if (na.requires_grad) {
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] = self.grad[i] * nb.value[i];
      accumulate_grad(na, g);
    }
    if (nb.requires_grad) {
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] = self.grad[i] * na.value[i];
      accumulate_grad(nb, g);
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  return unary<T>("scale", a, [s](T x) { return s * x; }, [s](T, T) { return s; });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return unary<T>("square", a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  return unary<T>(
      "sigmoid", a, [](T x) { return detail::sigmoid_scalar(x); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> tanh(const Var<T>& a) {
  return unary<T>("tanh", a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return unary<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> prelu(const Var<T>& x, const Var<T>& slope) {
  const auto c = x.dim(0);
  if (slope.numel() != static_cast<std::size_t>(c)) {
    throw DimensionError("prelu: slope has " + std::to_string(slope.numel()) + " entries for " + std::to_string(c) +
                         " channels");
  }
  const std::size_t inner = x.numel() / static_cast<std::size_t>(c);
  Tensor<T> out(x.shape());
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const T a = slope.value()[ch];
    const T* src = x.value().data() + ch * inner;
    T* dst = out.data() + ch * inner;
    for (std::size_t i = 0; i < inner; ++i) dst[i] = src[i] > T(0) ? src[i] : a * src[i];
  }
  return make_result<T>("prelu", std::move(out), {x, slope}, [c, inner](Node<T>& self) {
    Node<T>& nx = *self.parents[0];
    Node<T>& ns = *self.parents[1];
    Tensor<T> gx(nx.value.shape());
    Tensor<T> gs(ns.value.shape());
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T a = ns.value[ch];
      const T* src = nx.value.data() + ch * inner;
      const T* gy = self.grad.data() + ch * inner;
      T* dx = gx.data() + ch * inner;
      T acc = 0;
      for (std::size_t i = 0; i < inner; ++i) {
        if (src[i] > T(0)) {
          dx[i] = gy[i];
        } else {
          dx[i] = a * gy[i];
          acc += gy[i] * src[i];
        }
      }
      gs[ch] = acc;
    }
    accumulate_grad(nx, gx);
    accumulate_grad(ns, gs);
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T acc = 0;
  for (T v : a.value().values()) acc += v;
  return make_result<T>("sum", Tensor<T>({1}, std::vector<T>{acc}), {a}, [](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    accumulate_grad(in, Tensor<T>(in.value.shape(), self.grad[0]));
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  if (a.numel() == 0) throw DimensionError("mean of empty tensor");
  T acc = 0;
  for (T v : a.value().values()) acc += v;
  const T n = static_cast<T>(a.numel());
  return make_result<T>("mean", Tensor<T>({1}, std::vector<T>{acc / n}), {a}, [n](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    accumulate_grad(in, Tensor<T>(in.value.shape(), self.grad[0] / n));
  });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return make_result<T>("reshape", std::move(out), {a}, [](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    accumulate_grad(in, self.grad);
  });
}

namespace {

std::vector<std::int64_t> strides_of(const Shape& s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
  return st;
}

// out[idx] = in[permuted idx]; out shape = in shape permuted by `perm`.
template <typename T>
Tensor<T> permute_tensor(const Tensor<T>& in, const std::vector<int>& perm) {
  const Shape& is = in.shape();
  const int r = static_cast<int>(is.size());
  Shape os(r);
  for (int i = 0; i < r; ++i) os[i] = is[perm[i]];
  auto ist = strides_of(is);
  std::vector<std::int64_t> src_stride(r);
  for (int i = 0; i < r; ++i) src_stride[i] = ist[perm[i]];
  Tensor<T> out(os);
  if (out.numel() == 0) return out;
  std::vector<std::int64_t> idx(r, 0);
  const T* src = in.data();
  T* dst = out.data();
  const std::int64_t last = os[r - 1];
  const std::int64_t last_stride = src_stride[r - 1];
  std::size_t o = 0;
  while (true) {
    std::int64_t base = 0;
    for (int i = 0; i < r - 1; ++i) base += idx[i] * src_stride[i];
    for (std::int64_t j = 0; j < last; ++j) dst[o++] = src[base + j * last_stride];
    int d = r - 2;
    while (d >= 0) {
      if (++idx[d] < os[d]) break;
      idx[d] = 0;
      --d;
    }
    if (d < 0) break;
  }
  return out;
}

}  // namespace

template <typename T>
Var<T> permute(const Var<T>& a, const std::vector<int>& perm) {
  const int r = a.value().rank();
  if (static_cast<int>(perm.size()) != r) throw DimensionError("permute: permutation rank mismatch");
  std::vector<int> inv(r, -1);
  for (int i = 0; i < r; ++i) {
    if (perm[i] < 0 || perm[i] >= r || inv[perm[i]] != -1) throw DimensionError("permute: invalid permutation");
    inv[perm[i]] = i;
  }
  return make_result<T>("permute", permute_tensor(a.value(), perm), {a}, [inv](Node<T>& self) {
    accumulate_grad(*self.parents[0], permute_tensor(self.grad, inv));
  });
}

namespace {

struct AxisSplit {
  std::int64_t outer = 1;
  std::int64_t inner = 1;
};

AxisSplit split_at(const Shape& s, int axis) {
  AxisSplit r;
  for (int i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

int normalize_axis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw DimensionError(std::string(op) + ": axis out of range");
  return axis;
}

}  // namespace

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  axis = normalize_axis(axis, static_cast<int>(s0.size()), "concat");
  Shape os = s0;
  os[axis] = 0;
  std::vector<std::int64_t> sizes;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (static_cast<int>(i) != axis && s[i] != s0[i]) {
        throw DimensionError("concat: shape mismatch " + shape_str(s) + " vs " + shape_str(s0));
      }
    }
    sizes.push_back(s[axis]);
    os[axis] += s[axis];
  }
  const auto sp = split_at(os, axis);
  Tensor<T> out(os);
  std::int64_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const std::int64_t chunk = sizes[p] * sp.inner;
    const T* src = parts[p].value().data();
    for (std::int64_t o = 0; o < sp.outer; ++o) {
      std::copy_n(src + o * chunk, chunk, out.data() + o * os[axis] * sp.inner + offset);
    }
    offset += chunk;
  }
  const std::int64_t total = os[axis];
  std::vector<Var<T>> inputs(parts.begin(), parts.end());
  return make_result<T>("concat", std::move(out), inputs, [sizes, sp, total](Node<T>& self) {
    std::int64_t offset = 0;
    for (std::size_t p = 0; p < sizes.size(); ++p) {
      const std::int64_t chunk = sizes[p] * sp.inner;
      Node<T>& in = *self.parents[p];
      if (in.requires_grad) {
        Tensor<T> g(in.value.shape());
        for (std::int64_t o = 0; o < sp.outer; ++o) {
          std::copy_n(self.grad.data() + o * total * sp.inner + offset, chunk, g.data() + o * chunk);
        }
        accumulate_grad(in, g);
      }
      offset += chunk;
    }
  });
}

template <typename T>
Var<T> slice(const Var<T>& a, int axis, std::int64_t begin, std::int64_t end) {
  const Shape& s = a.shape();
  axis = normalize_axis(axis, static_cast<int>(s.size()), "slice");
  if (begin < 0 || end > s[axis] || begin > end) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for axis of size " + std::to_string(s[axis]));
  }
  Shape os = s;
  os[axis] = end - begin;
  const auto sp = split_at(s, axis);
  const std::int64_t in_row = s[axis] * sp.inner;
  const std::int64_t chunk = (end - begin) * sp.inner;
  Tensor<T> out(os);
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    std::copy_n(a.value().data() + o * in_row + begin * sp.inner, chunk, out.data() + o * chunk);
  }
  return make_result<T>("slice", std::move(out), {a}, [sp, in_row, chunk, begin](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Tensor<T> g(in.value.shape());
    for (std::int64_t o = 0; o < sp.outer; ++o) {
      std::copy_n(self.grad.data() + o * chunk, chunk, g.data() + o * in_row + begin * sp.inner);
    }
    accumulate_grad(in, g);
  });
}

template <typename T>
Var<T> complex_mul(const Var<T>& x, const Var<T>& m) {
  require_same_shape("complex_mul", x, m);
  if (x.shape().empty() || x.dim(0) != 2) {
    throw DimensionError("complex_mul: leading axis must be 2 (real, imag), got " + shape_str(x.shape()));
  }
  const std::size_t n = x.numel() / 2;
  Tensor<T> out(x.shape());
  const T* xr = x.value().data();
  const T* xi = xr + n;
  const T* mr = m.value().data();
  const T* mi = mr + n;
  T* yr = out.data();
  T* yi = yr + n;
  for (std::size_t k = 0; k < n; ++k) {
    yr[k] = xr[k] * mr[k] - xi[k] * mi[k];
    yi[k] = xr[k] * mi[k] + xi[k] * mr[k];
  }
  return make_result<T>("complex_mul", std::move(out), {x, m}, [n](Node<T>& self) {
    Node<T>& nx = *self.parents[0];
    Node<T>& nm = *self.parents[1];
    const T* gr = self.grad.data();
    const T* gi = gr + n;
    if (nx.requires_grad) {
      Tensor<T> g(nx.value.shape());
      const T* mr = nm.value.data();
      const T* mi = mr + n;
      for (std::size_t k = 0; k < n; ++k) {
        g[k] = gr[k] * mr[k] + gi[k] * mi[k];
        g[n + k] = -gr[k] * mi[k] + gi[k] * mr[k];
      }
      accumulate_grad(nx, g);
    }
    if (nm.requires_grad) {
      Tensor<T> g(nm.value.shape());
      const T* xr = nx.value.data();
      const T* xi = xr + n;
      for (std::size_t k = 0; k < n; ++k) {
        g[k] = gr[k] * xr[k] + gi[k] * xi[k];
        g[n + k] = -gr[k] * xi[k] + gi[k] * xr[k];
      }
      accumulate_grad(nm, g);
    }
  });
}

template <typename T>
Var<T> complex_abs(const Var<T>& x, T eps) {
  if (x.shape().empty() || x.dim(0) != 2) {
    throw DimensionError("complex_abs: leading axis must be 2 (real, imag), got " + shape_str(x.shape()));
  }
  const std::size_t n = x.numel() / 2;
  Shape os(x.shape().begin() + 1, x.shape().end());
  Tensor<T> out(os);
  const T* re = x.value().data();
  const T* im = re + n;
  for (std::size_t k = 0; k < n; ++k) out[k] = std::sqrt(re[k] * re[k] + im[k] * im[k]);
  return make_result<T>("complex_abs", std::move(out), {x}, [n, eps](Node<T>& self) {
    Node<T>& nx = *self.parents[0];
    Tensor<T> g(nx.value.shape());
    const T* re = nx.value.data();
    const T* im = re + n;
    for (std::size_t k = 0; k < n; ++k) {
      const T s = self.grad[k] / std::sqrt(re[k] * re[k] + im[k] * im[k] + eps);
      g[k] = s * re[k];
      g[n + k] = s * im[k];
    }
    accumulate_grad(nx, g);
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, int axis, T eps) {
  const Shape& s = x.shape();
  axis = normalize_axis(axis, static_cast<int>(s.size()), "layer_norm");
  const std::int64_t n = s[axis];
  if (gamma.numel() != static_cast<std::size_t>(n) || beta.numel() != static_cast<std::size_t>(n)) {
    throw DimensionError("layer_norm: affine parameters must have " + std::to_string(n) + " entries");
  }
  const auto sp = split_at(s, axis);
  const std::int64_t inner = sp.inner;
  Tensor<T> out(s);
  Tensor<T> xhat(s);
  Tensor<T> inv_std({sp.outer, inner});
  std::vector<T> mu(inner), var(inner);
  const T* g = gamma.value().data();
  const T* bt = beta.value().data();
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    const T* src = x.value().data() + o * n * inner;
    std::fill(mu.begin(), mu.end(), T(0));
    std::fill(var.begin(), var.end(), T(0));
    for (std::int64_t j = 0; j < n; ++j) {
      for (std::int64_t i = 0; i < inner; ++i) mu[i] += src[j * inner + i];
    }
    for (std::int64_t i = 0; i < inner; ++i) mu[i] /= static_cast<T>(n);
    for (std::int64_t j = 0; j < n; ++j) {
      for (std::int64_t i = 0; i < inner; ++i) {
        const T d = src[j * inner + i] - mu[i];
        var[i] += d * d;
      }
    }
    T* is = inv_std.data() + o * inner;
    for (std::int64_t i = 0; i < inner; ++i) is[i] = T(1) / std::sqrt(var[i] / static_cast<T>(n) + eps);
    T* xh = xhat.data() + o * n * inner;
    T* dst = out.data() + o * n * inner;
    for (std::int64_t j = 0; j < n; ++j) {
      for (std::int64_t i = 0; i < inner; ++i) {
        const T v = (src[j * inner + i] - mu[i]) * is[i];
        xh[j * inner + i] = v;
        dst[j * inner + i] = v * g[j] + bt[j];
      }
    }
  }
  return make_result<T>(
      "layer_norm", std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), n, sp](Node<T>& self) {
        Node<T>& nx = *self.parents[0];
        Node<T>& ng = *self.parents[1];
        Node<T>& nb = *self.parents[2];
        const std::int64_t inner = sp.inner;
        Tensor<T> gx(nx.value.shape());
        Tensor<T> gg(ng.value.shape());
        Tensor<T> gb(nb.value.shape());
        std::vector<T> m1(inner), m2(inner);
        const T* gam = ng.value.data();
        for (std::int64_t o = 0; o < sp.outer; ++o) {
          const T* gy = self.grad.data() + o * n * inner;
          const T* xh = xhat.data() + o * n * inner;
          const T* is = inv_std.data() + o * inner;
          std::fill(m1.begin(), m1.end(), T(0));
          std::fill(m2.begin(), m2.end(), T(0));
          for (std::int64_t j = 0; j < n; ++j) {
            T gsum = 0, bsum = 0;
            for (std::int64_t i = 0; i < inner; ++i) {
              const T gyv = gy[j * inner + i];
              const T d = gyv * gam[j];
              m1[i] += d;
              m2[i] += d * xh[j * inner + i];
              gsum += gyv * xh[j * inner + i];
              bsum += gyv;
            }
            gg[j] += gsum;
            gb[j] += bsum;
          }
          T* dx = gx.data() + o * n * inner;
          for (std::int64_t j = 0; j < n; ++j) {
            for (std::int64_t i = 0; i < inner; ++i) {
              const T d = gy[j * inner + i] * gam[j];
              dx[j * inner + i] =
                  is[i] * (d - m1[i] / static_cast<T>(n) - xh[j * inner + i] * m2[i] / static_cast<T>(n));
            }
          }
        }
        accumulate_grad(nx, gx);
        accumulate_grad(ng, gg);
        accumulate_grad(nb, gb);
      });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  detail::require_rank("linear(weight)", w.shape(), 2);
  const std::int64_t din = w.dim(1);
  const std::int64_t dout = w.dim(0);
  if (x.shape().empty() || x.shape().back() != din) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(w.shape()));
  }
  if (b.defined() && b.numel() != static_cast<std::size_t>(dout)) throw DimensionError("linear: bias size mismatch");
  const std::int64_t rows = static_cast<std::int64_t>(x.numel()) / din;
  Shape os = x.shape();
  os.back() = dout;
  Tensor<T> out(os);
  if (b.defined()) {
    for (std::int64_t r = 0; r < rows; ++r) std::copy_n(b.value().data(), dout, out.data() + r * dout);
  }
  detail::gemm(false, true, detail::as_int(rows), detail::as_int(dout), detail::as_int(din), T(1), x.value().data(),
               detail::as_int(din), w.value().data(), detail::as_int(din), b.defined() ? T(1) : T(0), out.data(),
               detail::as_int(dout));
  std::vector<Var<T>> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_result<T>("linear", std::move(out), inputs, [rows, din, dout](Node<T>& self) {
    Node<T>& nx = *self.parents[0];
    Node<T>& nw = *self.parents[1];
    const int r = detail::as_int(rows), di = detail::as_int(din), dd = detail::as_int(dout);
    if (nx.requires_grad) {
      Tensor<T> gx(nx.value.shape());
      detail::gemm(false, false, r, di, dd, T(1), self.grad.data(), dd, nw.value.data(), di, T(0), gx.data(), di);
      accumulate_grad(nx, gx);
    }
    if (nw.requires_grad) {
      Tensor<T> gw(nw.value.shape());
      detail::gemm(true, false, dd, di, r, T(1), self.grad.data(), dd, nx.value.data(), di, T(0), gw.data(), di);
      accumulate_grad(nw, gw);
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      Tensor<T> gb(self.parents[2]->value.shape());
      for (std::int64_t i = 0; i < rows; ++i) {
        for (std::int64_t j = 0; j < dout; ++j) gb[j] += self.grad[i * dout + j];
      }
      accumulate_grad(*self.parents[2], gb);
    }
  });
}

#define THL_INSTANTIATE(T)                                                                     \
  template Var<T> add(const Var<T>&, const Var<T>&);                                           \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                           \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                           \
  template Var<T> scale(const Var<T>&, T);                                                     \
  template Var<T> square(const Var<T>&);                                                       \
  template Var<T> sigmoid(const Var<T>&);                                                      \
  template Var<T> tanh(const Var<T>&);                                                         \
  template Var<T> relu(const Var<T>&);                                                         \
  template Var<T> prelu(const Var<T>&, const Var<T>&);                                         \
  template Var<T> sum(const Var<T>&);                                                          \
  template Var<T> mean(const Var<T>&);                                                         \
  template Var<T> reshape(const Var<T>&, Shape);                                               \
  template Var<T> permute(const Var<T>&, const std::vector<int>&);                             \
  template Var<T> concat(const std::vector<Var<T>>&, int);                                     \
  template Var<T> slice(const Var<T>&, int, std::int64_t, std::int64_t);                       \
  template Var<T> complex_mul(const Var<T>&, const Var<T>&);                                   \
  template Var<T> complex_abs(const Var<T>&, T);                                               \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, int, T);             \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);

THL_INSTANTIATE(float)
THL_INSTANTIATE(double)
#undef THL_INSTANTIATE

}  // namespace thl::ops
