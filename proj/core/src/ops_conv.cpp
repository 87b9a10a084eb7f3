#include <algorithm>

#include "ops_common.hpp"

namespace thl::ops {

using detail::as_int;
using detail::gemm;

namespace {

struct Conv2dGeometry {
  std::int64_t cin, f, t, cout, kf, kt;
  std::int64_t fo, to, lpad;
  Conv2dOptions opt;

  std::int64_t k() const { return cin * kf * kt; }
  std::int64_t p() const { return fo * to; }
};

Conv2dGeometry conv2d_geometry(const Shape& xs, const Shape& ws, const Conv2dOptions& opt) {
  detail::require_rank("conv2d(input)", xs, 3);
  detail::require_rank("conv2d(weight)", ws, 4);
  if (xs[0] != ws[1]) {
    throw DimensionError("conv2d: weight expects " + std::to_string(ws[1]) + " input channels, input " +
                         shape_str(xs) + " has " + std::to_string(xs[0]));
  }
  if (opt.stride_f < 1 || opt.stride_t < 1 || opt.dilation_f < 1 || opt.dilation_t < 1 || opt.pad_f < 0) {
    throw ConfigError("conv2d: strides/dilations must be >= 1 and padding >= 0");
  }
  Conv2dGeometry g{xs[0], xs[1], xs[2], ws[0], ws[2], ws[3], 0, 0, 0, opt};
  if (g.kt < 1 || g.kf < 1) throw DimensionError("conv2d: kernel extents must be >= 1");
  g.lpad = opt.causal ? (g.kt - 1) * opt.dilation_t : 0;
  const std::int64_t span_f = opt.dilation_f * (g.kf - 1) + 1;
  const std::int64_t span_t = opt.dilation_t * (g.kt - 1) + 1;
  const std::int64_t fp = g.f + 2 * opt.pad_f;
  const std::int64_t tp = g.t + g.lpad;
  if (fp < span_f) throw DimensionError("conv2d: frequency axis too short for kernel, input " + shape_str(xs));
  if (tp < span_t) throw DimensionError("conv2d: time axis too short for kernel, input " + shape_str(xs));
  g.fo = (fp - span_f) / opt.stride_f + 1;
  g.to = (tp - span_t) / opt.stride_t + 1;
  return g;
}

template <typename T>
void im2col(const Conv2dGeometry& g, const T* x, T* cols) {
  const auto& o = g.opt;
  const std::int64_t p = g.p();
  for (std::int64_t ci = 0; ci < g.cin; ++ci) {
    for (std::int64_t kf = 0; kf < g.kf; ++kf) {
      for (std::int64_t kt = 0; kt < g.kt; ++kt) {
        T* row = cols + ((ci * g.kf + kf) * g.kt + kt) * p;
        for (std::int64_t fo = 0; fo < g.fo; ++fo) {
          T* dst = row + fo * g.to;
          const std::int64_t fi = fo * o.stride_f - o.pad_f + kf * o.dilation_f;
          if (fi < 0 || fi >= g.f) {
            std::fill_n(dst, g.to, T(0));
            continue;
          }
          const T* src = x + (ci * g.f + fi) * g.t;
          const std::int64_t off = kt * o.dilation_t - g.lpad;
          for (std::int64_t to = 0; to < g.to; ++to) {
            const std::int64_t ti = to * o.stride_t + off;
            dst[to] = (ti >= 0 && ti < g.t) ? src[ti] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const Conv2dGeometry& g, const T* cols, T* dx) {
  const auto& o = g.opt;
  const std::int64_t p = g.p();
  for (std::int64_t ci = 0; ci < g.cin; ++ci) {
    for (std::int64_t kf = 0; kf < g.kf; ++kf) {
      for (std::int64_t kt = 0; kt < g.kt; ++kt) {
        const T* row = cols + ((ci * g.kf + kf) * g.kt + kt) * p;
        for (std::int64_t fo = 0; fo < g.fo; ++fo) {
          const std::int64_t fi = fo * o.stride_f - o.pad_f + kf * o.dilation_f;
          if (fi < 0 || fi >= g.f) continue;
          const T* src = row + fo * g.to;
          T* dst = dx + (ci * g.f + fi) * g.t;
          const std::int64_t off = kt * o.dilation_t - g.lpad;
          for (std::int64_t to = 0; to < g.to; ++to) {
            const std::int64_t ti = to * o.stride_t + off;
            if (ti >= 0 && ti < g.t) dst[ti] += src[to];
          }
        }
      }
    }
  }
}

template <typename T>
void add_channel_bias(const Var<T>& b, std::int64_t channels, std::int64_t inner, T* out) {
  if (!b.defined()) return;
  if (b.numel() != static_cast<std::size_t>(channels)) throw DimensionError("bias size does not match channels");
  for (std::int64_t c = 0; c < channels; ++c) {
    const T v = b.value()[c];
    T* dst = out + c * inner;
    for (std::int64_t i = 0; i < inner; ++i) dst[i] += v;
  }
}

template <typename T>
void bias_grad(Node<T>& nb, const Tensor<T>& gy, std::int64_t channels, std::int64_t inner) {
  if (!nb.requires_grad) return;
  Tensor<T> gb(nb.value.shape());
  for (std::int64_t c = 0; c < channels; ++c) {
    T acc = 0;
    const T* src = gy.data() + c * inner;
    for (std::int64_t i = 0; i < inner; ++i) acc += src[i];
    gb[c] = acc;
  }
  accumulate_grad(nb, gb);
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const Conv2dOptions& opt) {
  const Conv2dGeometry g = conv2d_geometry(x.shape(), w.shape(), opt);
  const std::int64_t k = g.k(), p = g.p();
  std::vector<T> cols(static_cast<std::size_t>(k * p));
  im2col(g, x.value().data(), cols.data());
  Tensor<T> out({g.cout, g.fo, g.to});
  gemm(false, false, as_int(g.cout), as_int(p), as_int(k), T(1), w.value().data(), as_int(k), cols.data(), as_int(p),
       T(0), out.data(), as_int(p));
  add_channel_bias(b, g.cout, p, out.data());

  std::vector<Var<T>> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_result<T>("conv2d", std::move(out), inputs, [g](Node<T>& self) {
    Node<T>& nx = *self.parents[0];
    Node<T>& nw = *self.parents[1];
    const std::int64_t k = g.k(), p = g.p();
    std::vector<T> cols(static_cast<std::size_t>(k * p));
    if (nw.requires_grad) {
      im2col(g, nx.value.data(), cols.data());
      Tensor<T> gw(nw.value.shape());
      gemm(false, true, as_int(g.cout), as_int(k), as_int(p), T(1), self.grad.data(), as_int(p), cols.data(),
           as_int(p), T(0), gw.data(), as_int(k));
      accumulate_grad(nw, gw);
    }
    if (nx.requires_grad) {
      gemm(true, false, as_int(k), as_int(p), as_int(g.cout), T(1), nw.value.data(), as_int(k), self.grad.data(),
           as_int(p), T(0), cols.data(), as_int(p));
      Tensor<T> gx(nx.value.shape());
      col2im(g, cols.data(), gx.data());
      accumulate_grad(nx, gx);
    }
    if (self.parents.size() > 2) bias_grad(*self.parents[2], self.grad, g.cout, p);
  });
}

namespace {

struct ConvT2dGeometry {
  std::int64_t cin, fi, t, cout, kf, kt;
  std::int64_t fo, to, ctx;
  ConvTranspose2dOptions opt;

  std::int64_t k() const { return cout * kf * kt; }
};

ConvT2dGeometry convt_geometry(const Shape& xs, const Shape& ws, const ConvTranspose2dOptions& opt) {
  detail::require_rank("conv_transpose2d(input)", xs, 3);
  detail::require_rank("conv_transpose2d(weight)", ws, 4);
  if (xs[0] != ws[0]) {
    throw DimensionError("conv_transpose2d: weight expects " + std::to_string(ws[0]) + " input channels, input " +
                         shape_str(xs) + " has " + std::to_string(xs[0]));
  }
  if (opt.stride_f < 1 || opt.dilation_t < 1 || opt.pad_f < 0 || opt.output_pad_f < 0 ||
      opt.output_pad_f >= opt.stride_f) {
    throw ConfigError("conv_transpose2d: invalid stride/padding/output padding combination");
  }
  ConvT2dGeometry g{xs[0], xs[1], xs[2], ws[1], ws[2], ws[3], 0, 0, 0, opt};
  g.fo = (g.fi - 1) * opt.stride_f - 2 * opt.pad_f + g.kf + opt.output_pad_f;
  if (g.fo < 1) throw ConfigError("conv_transpose2d: non-positive output frequency size");
  g.ctx = (g.kt - 1) * opt.dilation_t;
  g.to = opt.causal ? g.t : g.t - g.ctx;
  if (g.to < 1) throw DimensionError("conv_transpose2d: time axis shorter than kernel context");
  return g;
}

// cols[(co, kf, kt), (fi, t)] scattered to out[co, fo, to].
template <typename T>
void col2im_t(const ConvT2dGeometry& g, const T* cols, T* out) {
  const std::int64_t p = g.fi * g.t;
  const std::int64_t shift = g.opt.causal ? 0 : g.ctx;
  for (std::int64_t co = 0; co < g.cout; ++co) {
    for (std::int64_t kf = 0; kf < g.kf; ++kf) {
      for (std::int64_t kt = 0; kt < g.kt; ++kt) {
        const T* row = cols + ((co * g.kf + kf) * g.kt + kt) * p;
        const std::int64_t dt = kt * g.opt.dilation_t - shift;
        for (std::int64_t fi = 0; fi < g.fi; ++fi) {
          const std::int64_t fo = fi * g.opt.stride_f - g.opt.pad_f + kf;
          if (fo < 0 || fo >= g.fo) continue;
          const T* src = row + fi * g.t;
          T* dst = out + (co * g.fo + fo) * g.to;
          for (std::int64_t t = 0; t < g.t; ++t) {
            const std::int64_t to = t + dt;
            if (to >= 0 && to < g.to) dst[to] += src[t];
          }
        }
      }
    }
  }
}

template <typename T>
void im2col_t(const ConvT2dGeometry& g, const T* gy, T* cols) {
  const std::int64_t p = g.fi * g.t;
  const std::int64_t shift = g.opt.causal ? 0 : g.ctx;
  for (std::int64_t co = 0; co < g.cout; ++co) {
    for (std::int64_t kf = 0; kf < g.kf; ++kf) {
      for (std::int64_t kt = 0; kt < g.kt; ++kt) {
        T* row = cols + ((co * g.kf + kf) * g.kt + kt) * p;
        const std::int64_t dt = kt * g.opt.dilation_t - shift;
        for (std::int64_t fi = 0; fi < g.fi; ++fi) {
          T* dst = row + fi * g.t;
          const std::int64_t fo = fi * g.opt.stride_f - g.opt.pad_f + kf;
          if (fo < 0 || fo >= g.fo) {
            std::fill_n(dst, g.t, T(0));
            continue;
          }
          const T* src = gy + (co * g.fo + fo) * g.to;
          for (std::int64_t t = 0; t < g.t; ++t) {
            const std::int64_t to = t + dt;
            dst[t] = (to >= 0 && to < g.to) ? src[to] : T(0);
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const ConvTranspose2dOptions& opt) {
  const ConvT2dGeometry g = convt_geometry(x.shape(), w.shape(), opt);
  const std::int64_t k = g.k(), p = g.fi * g.t;
  std::vector<T> cols(static_cast<std::size_t>(k * p));
  gemm(true, false, as_int(k), as_int(p), as_int(g.cin), T(1), w.value().data(), as_int(k), x.value().data(),
       as_int(p), T(0), cols.data(), as_int(p));
  Tensor<T> out({g.cout, g.fo, g.to});
  col2im_t(g, cols.data(), out.data());
  add_channel_bias(b, g.cout, g.fo * g.to, out.data());

  std::vector<Var<T>> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_result<T>("conv_transpose2d", std::move(out), inputs, [g](Node<T>& self) {
    Node<T>& nx = *self.parents[0];
    Node<T>& nw = *self.parents[1];
    const std::int64_t k = g.k(), p = g.fi * g.t;
    std::vector<T> cols(static_cast<std::size_t>(k * p));
    im2col_t(g, self.grad.data(), cols.data());
    if (nx.requires_grad) {
      Tensor<T> gx(nx.value.shape());
      gemm(false, false, as_int(g.cin), as_int(p), as_int(k), T(1), nw.value.data(), as_int(k), cols.data(),
           as_int(p), T(0), gx.data(), as_int(p));
      accumulate_grad(nx, gx);
    }
    if (nw.requires_grad) {
      Tensor<T> gw(nw.value.shape());
      gemm(false, true, as_int(g.cin), as_int(k), as_int(p), T(1), nx.value.data(), as_int(p), cols.data(),
           as_int(p), T(0), gw.data(), as_int(k));
      accumulate_grad(nw, gw);
    }
    if (self.parents.size() > 2) bias_grad(*self.parents[2], self.grad, g.cout, g.fo * g.to);
  });
}

template <typename T>
Var<T> grouped_conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int groups) {
  detail::require_rank("grouped_conv1d(input)", x.shape(), 2);
  detail::require_rank("grouped_conv1d(weight)", w.shape(), 3);
  const std::int64_t cin = x.dim(0), len = x.dim(1), cout = w.dim(0), k = w.dim(2);
  if (groups < 1 || cin % groups != 0 || cout % groups != 0) {
    throw DimensionError("grouped_conv1d: channels " + std::to_string(cin) + "->" + std::to_string(cout) +
                         " not divisible by groups " + std::to_string(groups));
  }
  const std::int64_t gin = cin / groups, gout = cout / groups;
  if (w.dim(1) != gin) {
    throw DimensionError("grouped_conv1d: weight " + shape_str(w.shape()) + " expects " + std::to_string(w.dim(1)) +
                         " inputs per group, got " + std::to_string(gin));
  }
  Tensor<T> out({cout, len});
  add_channel_bias(b, cout, len, out.data());
  const T* xv = x.value().data();
  const T* wv = w.value().data();
  for (std::int64_t co = 0; co < cout; ++co) {
    const std::int64_t grp = co / gout;
    T* dst = out.data() + co * len;
    for (std::int64_t c = 0; c < gin; ++c) {
      const T* src = xv + (grp * gin + c) * len;
      for (std::int64_t j = 0; j < k; ++j) {
        const T wt = wv[(co * gin + c) * k + j];
        const std::int64_t shift = k - 1 - j;  // causal: tap j reads x[l - (k-1) + j]
        for (std::int64_t l = shift; l < len; ++l) dst[l] += wt * src[l - shift];
      }
    }
  }
  std::vector<Var<T>> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_result<T>("grouped_conv1d", std::move(out), inputs,
                        [cin, len, cout, k, gin, gout](Node<T>& self) {
                          Node<T>& nx = *self.parents[0];
                          Node<T>& nw = *self.parents[1];
                          Tensor<T> gx(nx.value.shape());
                          Tensor<T> gw(nw.value.shape());
                          const T* xv = nx.value.data();
                          const T* wv = nw.value.data();
                          for (std::int64_t co = 0; co < cout; ++co) {
                            const std::int64_t grp = co / gout;
                            const T* gy = self.grad.data() + co * len;
                            for (std::int64_t c = 0; c < gin; ++c) {
                              const T* src = xv + (grp * gin + c) * len;
                              T* dsrc = gx.data() + (grp * gin + c) * len;
                              for (std::int64_t j = 0; j < k; ++j) {
                                const std::int64_t widx = (co * gin + c) * k + j;
                                const std::int64_t shift = k - 1 - j;
                                T acc = 0;
                                for (std::int64_t l = shift; l < len; ++l) {
                                  acc += gy[l] * src[l - shift];
                                  dsrc[l - shift] += wv[widx] * gy[l];
                                }
                                gw[widx] = acc;
                              }
                            }
                          }
                          (void)cin;
                          accumulate_grad(nx, gx);
                          accumulate_grad(nw, gw);
                          if (self.parents.size() > 2) bias_grad(*self.parents[2], self.grad, cout, len);
                        });
}

#define THL_INSTANTIATE(T)                                                                           \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, const Conv2dOptions&);         \
  template Var<T> conv_transpose2d(const Var<T>&, const Var<T>&, const Var<T>&,                      \
                                   const ConvTranspose2dOptions&);                                   \
  template Var<T> grouped_conv1d(const Var<T>&, const Var<T>&, const Var<T>&, int);

THL_INSTANTIATE(float)
THL_INSTANTIATE(double)
#undef THL_INSTANTIATE

}  // namespace thl::ops
