#include <algorithm>

#include "ops_common.hpp"

namespace thl::ops {

using detail::as_int;
using detail::gemm;
using detail::sigmoid_inplace;
using detail::tanh_inplace;

namespace {

struct SeqDims {
  std::int64_t n, l, d, h;
};

SeqDims check_recurrent(const char* op, const Shape& xs, const Shape& wih, const Shape& whh, int gates) {
  detail::require_rank(op, xs, 3);
  detail::require_rank(op, wih, 2);
  detail::require_rank(op, whh, 2);
  const std::int64_t h = whh[1];
  if (wih[0] != gates * h || whh[0] != gates * h || wih[1] != xs[2]) {
    throw DimensionError(std::string(op) + ": weights " + shape_str(wih) + "/" + shape_str(whh) +
                         " inconsistent with input " + shape_str(xs));
  }
  return {xs[0], xs[1], xs[2], h};
}

void check_state(const char* op, const void* state, const Shape* s, std::int64_t n, std::int64_t h) {
  if (state && (*s != Shape{n, h})) {
    throw DimensionError(std::string(op) + ": state shape " + shape_str(*s) + " does not match [" +
                         std::to_string(n) + "x" + std::to_string(h) + "]");
  }
}

// Input projection for every step at once: out[N*L, G] = x[N*L, D] * W^T + b.
template <typename T>
std::vector<T> project_inputs(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, std::int64_t rows,
                              std::int64_t d, std::int64_t g) {
  std::vector<T> out(static_cast<std::size_t>(rows * g));
  if (b) {
    for (std::int64_t r = 0; r < rows; ++r) std::copy_n(b->data(), g, out.data() + r * g);
  }
  gemm(false, true, as_int(rows), as_int(g), as_int(d), T(1), x.data(), as_int(d), w.data(), as_int(d),
       b ? T(1) : T(0), out.data(), as_int(g));
  return out;
}

}  // namespace

template <typename T>
RecurrentResult<T> lstm(const Var<T>& x, const Var<T>& w_ih, const Var<T>& w_hh, const Var<T>& b, bool reverse,
                        const Tensor<T>* h0, const Tensor<T>* c0) {
  const SeqDims s = check_recurrent("lstm", x.shape(), w_ih.shape(), w_hh.shape(), 4);
  const std::int64_t n = s.n, l = s.l, h = s.h, g4 = 4 * h;
  if (b.numel() != static_cast<std::size_t>(g4)) throw DimensionError("lstm: bias must have 4H entries");
  check_state("lstm", h0, h0 ? &h0->shape() : nullptr, n, h);
  check_state("lstm", c0, c0 ? &c0->shape() : nullptr, n, h);

  std::vector<T> xg = project_inputs(x.value(), w_ih.value(), &b.value(), n * l, s.d, g4);
  // Per-step caches laid out [N, L, H] so weight gradients reduce with one GEMM each.
  const std::size_t nlh = static_cast<std::size_t>(n * l * h);
  auto cache = std::make_shared<std::vector<T>>(6 * nlh);  // i, f, g, o, c, h_prev
  T* ci = cache->data();
  T* cf = ci + nlh;
  T* cg = cf + nlh;
  T* co = cg + nlh;
  T* cc = co + nlh;
  T* chp = cc + nlh;

  Tensor<T> out({n, l, h});
  std::vector<T> hs(static_cast<std::size_t>(n * h), T(0)), cs(hs.size(), T(0)), tc(hs.size());
  std::vector<T> gates(static_cast<std::size_t>(n * g4));
  if (h0) std::copy(h0->values().begin(), h0->values().end(), hs.begin());
  if (c0) std::copy(c0->values().begin(), c0->values().end(), cs.begin());
  const T* whh = w_hh.value().data();
  for (std::int64_t step = 0; step < l; ++step) {
    const std::int64_t t = reverse ? l - 1 - step : step;
    gemm(false, true, as_int(n), as_int(g4), as_int(h), T(1), hs.data(), as_int(h), whh, as_int(h), T(0),
         gates.data(), as_int(g4));
    for (std::int64_t b_ = 0; b_ < n; ++b_) {
      const T* xr = xg.data() + (b_ * l + t) * g4;
      T* gr = gates.data() + b_ * g4;
      for (std::int64_t j = 0; j < g4; ++j) gr[j] += xr[j];
      sigmoid_inplace(gr, 2 * h);
      tanh_inplace(gr + 2 * h, h);
      sigmoid_inplace(gr + 3 * h, h);
      const std::size_t base = static_cast<std::size_t>((b_ * l + t) * h);
      T* tcr = tc.data() + b_ * h;
      for (std::int64_t j = 0; j < h; ++j) {
        const T iv = gr[j], fv = gr[h + j], gv = gr[2 * h + j], ov = gr[3 * h + j];
        const T cv = fv * cs[b_ * h + j] + iv * gv;
        chp[base + j] = hs[b_ * h + j];
        ci[base + j] = iv;
        cf[base + j] = fv;
        cg[base + j] = gv;
        co[base + j] = ov;
        cc[base + j] = cv;
        cs[b_ * h + j] = cv;
        tcr[j] = cv;
      }
    }
    tanh_inplace(tc.data(), n * h);
    for (std::int64_t b_ = 0; b_ < n; ++b_) {
      const std::size_t base = static_cast<std::size_t>((b_ * l + t) * h);
      for (std::int64_t j = 0; j < h; ++j) {
        const T hv = co[base + j] * tc[b_ * h + j];
        hs[b_ * h + j] = hv;
        out[base + j] = hv;
      }
    }
  }

  RecurrentResult<T> res;
  res.final_h = Tensor<T>({n, h}, hs);
  res.final_c = Tensor<T>({n, h}, cs);
  std::vector<T> c_init(static_cast<std::size_t>(n * h), T(0));
  if (c0) std::copy(c0->values().begin(), c0->values().end(), c_init.begin());

  res.output = make_result<T>(
      "lstm", std::move(out), {x, w_ih, w_hh, b},
      [cache, c_init = std::move(c_init), n, l, h, d = s.d, reverse](Node<T>& self) {
        Node<T>& nx = *self.parents[0];
        Node<T>& nwih = *self.parents[1];
        Node<T>& nwhh = *self.parents[2];
        Node<T>& nb = *self.parents[3];
        const std::int64_t g4 = 4 * h;
        const std::size_t nlh = static_cast<std::size_t>(n * l * h);
        const T* ci = cache->data();
        const T* cf = ci + nlh;
        const T* cg = cf + nlh;
        const T* co = cg + nlh;
        const T* cc = co + nlh;
        const T* chp = cc + nlh;
        std::vector<T> dxg(static_cast<std::size_t>(n * l * g4));
        std::vector<T> dh(static_cast<std::size_t>(n * h), T(0)), dc(dh.size(), T(0));
        std::vector<T> dgates(static_cast<std::size_t>(n * g4)), tanh_c(static_cast<std::size_t>(h));
        const T* gy = self.grad.data();
        const T* whh = nwhh.value.data();
        for (std::int64_t step = l - 1; step >= 0; --step) {
          const std::int64_t t = reverse ? l - 1 - step : step;
          const std::int64_t tprev = reverse ? t + 1 : t - 1;  // step that produced c_prev
          for (std::int64_t b_ = 0; b_ < n; ++b_) {
            const std::size_t base = static_cast<std::size_t>((b_ * l + t) * h);
            T* dg = dgates.data() + b_ * g4;
            std::copy_n(cc + base, h, tanh_c.data());
            tanh_inplace(tanh_c.data(), h);
            for (std::int64_t j = 0; j < h; ++j) {
              const T iv = ci[base + j], fv = cf[base + j], gv = cg[base + j], ov = co[base + j];
              const T tc = tanh_c[j];
              const T cprev = (step == 0) ? c_init[b_ * h + j]
                                          : cc[static_cast<std::size_t>((b_ * l + tprev) * h + j)];
              const T dhv = gy[base + j] + dh[b_ * h + j];
              const T dov = dhv * tc;
              const T dcv = dhv * ov * (T(1) - tc * tc) + dc[b_ * h + j];
              dg[j] = dcv * gv * iv * (T(1) - iv);
              dg[h + j] = dcv * cprev * fv * (T(1) - fv);
              dg[2 * h + j] = dcv * iv * (T(1) - gv * gv);
              dg[3 * h + j] = dov * ov * (T(1) - ov);
              dc[b_ * h + j] = dcv * fv;
            }
            std::copy_n(dg, g4, dxg.data() + (b_ * l + t) * g4);
          }
          gemm(false, false, as_int(n), as_int(h), as_int(g4), T(1), dgates.data(), as_int(g4), whh, as_int(h), T(0),
               dh.data(), as_int(h));
        }
        const int rows = as_int(n * l);
        if (nwhh.requires_grad) {
          Tensor<T> gw(nwhh.value.shape());
          gemm(true, false, as_int(g4), as_int(h), rows, T(1), dxg.data(), as_int(g4), chp, as_int(h), T(0),
               gw.data(), as_int(h));
          accumulate_grad(nwhh, gw);
        }
        if (nwih.requires_grad) {
          Tensor<T> gw(nwih.value.shape());
          gemm(true, false, as_int(g4), as_int(d), rows, T(1), dxg.data(), as_int(g4), nx.value.data(), as_int(d),
               T(0), gw.data(), as_int(d));
          accumulate_grad(nwih, gw);
        }
        if (nx.requires_grad) {
          Tensor<T> gx(nx.value.shape());
          gemm(false, false, rows, as_int(d), as_int(g4), T(1), dxg.data(), as_int(g4), nwih.value.data(), as_int(d),
               T(0), gx.data(), as_int(d));
          accumulate_grad(nx, gx);
        }
        if (nb.requires_grad) {
          Tensor<T> gb(nb.value.shape());
          for (std::int64_t r = 0; r < n * l; ++r) {
            for (std::int64_t j = 0; j < g4; ++j) gb[j] += dxg[r * g4 + j];
          }
          accumulate_grad(nb, gb);
        }
      });
  return res;
}

template <typename T>
RecurrentResult<T> gru(const Var<T>& x, const Var<T>& w_ih, const Var<T>& w_hh, const Var<T>& b_ih,
                       const Var<T>& b_hh, bool reverse, const Tensor<T>* h0) {
  const SeqDims s = check_recurrent("gru", x.shape(), w_ih.shape(), w_hh.shape(), 3);
  const std::int64_t n = s.n, l = s.l, h = s.h, g3 = 3 * h;
  if (b_ih.numel() != static_cast<std::size_t>(g3) || b_hh.numel() != static_cast<std::size_t>(g3)) {
    throw DimensionError("gru: biases must have 3H entries");
  }
  check_state("gru", h0, h0 ? &h0->shape() : nullptr, n, h);

  std::vector<T> xg = project_inputs(x.value(), w_ih.value(), &b_ih.value(), n * l, s.d, g3);
  const std::size_t nlh = static_cast<std::size_t>(n * l * h);
  auto cache = std::make_shared<std::vector<T>>(5 * nlh);  // r, z, n, hn (W_hn h + b_hn), h_prev
  T* cr = cache->data();
  T* cz = cr + nlh;
  T* cn = cz + nlh;
  T* chn = cn + nlh;
  T* chp = chn + nlh;

  Tensor<T> out({n, l, h});
  std::vector<T> hs(static_cast<std::size_t>(n * h), T(0)), hh(static_cast<std::size_t>(n * g3));
  std::vector<T> act(static_cast<std::size_t>(g3));
  if (h0) std::copy(h0->values().begin(), h0->values().end(), hs.begin());
  const T* whh = w_hh.value().data();
  const T* bhh = b_hh.value().data();
  for (std::int64_t step = 0; step < l; ++step) {
    const std::int64_t t = reverse ? l - 1 - step : step;
    for (std::int64_t b_ = 0; b_ < n; ++b_) std::copy_n(bhh, g3, hh.data() + b_ * g3);
    gemm(false, true, as_int(n), as_int(g3), as_int(h), T(1), hs.data(), as_int(h), whh, as_int(h), T(1), hh.data(),
         as_int(g3));
    for (std::int64_t b_ = 0; b_ < n; ++b_) {
      const T* xr = xg.data() + (b_ * l + t) * g3;
      const T* hr = hh.data() + b_ * g3;
      T* rz = act.data();
      T* nn = rz + 2 * h;
      for (std::int64_t j = 0; j < 2 * h; ++j) rz[j] = xr[j] + hr[j];
      sigmoid_inplace(rz, 2 * h);
      for (std::int64_t j = 0; j < h; ++j) nn[j] = xr[2 * h + j] + rz[j] * hr[2 * h + j];
      tanh_inplace(nn, h);
      const std::size_t base = static_cast<std::size_t>((b_ * l + t) * h);
      for (std::int64_t j = 0; j < h; ++j) {
        const T rv = rz[j], zv = rz[h + j], nv = nn[j];
        const T hp = hs[b_ * h + j];
        cr[base + j] = rv;
        cz[base + j] = zv;
        cn[base + j] = nv;
        chn[base + j] = hr[2 * h + j];
        chp[base + j] = hp;
        const T hv = (T(1) - zv) * nv + zv * hp;
        hs[b_ * h + j] = hv;
        out[base + j] = hv;
      }
    }
  }

  RecurrentResult<T> res;
  res.final_h = Tensor<T>({n, h}, hs);
  res.output = make_result<T>(
      "gru", std::move(out), {x, w_ih, w_hh, b_ih, b_hh},
      [cache, n, l, h, d = s.d, reverse](Node<T>& self) {
        Node<T>& nx = *self.parents[0];
        Node<T>& nwih = *self.parents[1];
        Node<T>& nwhh = *self.parents[2];
        Node<T>& nbih = *self.parents[3];
        Node<T>& nbhh = *self.parents[4];
        const std::int64_t g3 = 3 * h;
        const std::size_t nlh = static_cast<std::size_t>(n * l * h);
        const T* cr = cache->data();
        const T* cz = cr + nlh;
        const T* cn = cz + nlh;
        const T* chn = cn + nlh;
        const T* chp = chn + nlh;
        std::vector<T> dxg(static_cast<std::size_t>(n * l * g3));
        std::vector<T> dhh_all(static_cast<std::size_t>(n * l * g3));
        std::vector<T> dh(static_cast<std::size_t>(n * h), T(0)), dh_direct(dh.size());
        std::vector<T> dhh(static_cast<std::size_t>(n * g3));
        const T* gy = self.grad.data();
        const T* whh = nwhh.value.data();
        for (std::int64_t step = l - 1; step >= 0; --step) {
          const std::int64_t t = reverse ? l - 1 - step : step;
          for (std::int64_t b_ = 0; b_ < n; ++b_) {
            const std::size_t base = static_cast<std::size_t>((b_ * l + t) * h);
            T* dxr = dxg.data() + (b_ * l + t) * g3;
            T* dhr = dhh.data() + b_ * g3;
            for (std::int64_t j = 0; j < h; ++j) {
              const T rv = cr[base + j], zv = cz[base + j], nv = cn[base + j];
              const T hnv = chn[base + j], hp = chp[base + j];
              const T dhv = gy[base + j] + dh[b_ * h + j];
              const T dz = dhv * (hp - nv);
              const T dn = dhv * (T(1) - zv);
              dh_direct[b_ * h + j] = dhv * zv;
              const T dan = dn * (T(1) - nv * nv);
              const T dar = dan * hnv * rv * (T(1) - rv);
              const T daz = dz * zv * (T(1) - zv);
              dxr[j] = dar;
              dxr[h + j] = daz;
              dxr[2 * h + j] = dan;
              dhr[j] = dar;
              dhr[h + j] = daz;
              dhr[2 * h + j] = dan * rv;
            }
            std::copy_n(dhr, g3, dhh_all.data() + (b_ * l + t) * g3);
          }
          std::copy(dh_direct.begin(), dh_direct.end(), dh.begin());
          gemm(false, false, as_int(n), as_int(h), as_int(g3), T(1), dhh.data(), as_int(g3), whh, as_int(h), T(1),
               dh.data(), as_int(h));
        }
        const int rows = as_int(n * l);
        if (nwhh.requires_grad) {
          Tensor<T> gw(nwhh.value.shape());
          gemm(true, false, as_int(g3), as_int(h), rows, T(1), dhh_all.data(), as_int(g3), chp, as_int(h), T(0),
               gw.data(), as_int(h));
          accumulate_grad(nwhh, gw);
        }
        if (nwih.requires_grad) {
          Tensor<T> gw(nwih.value.shape());
          gemm(true, false, as_int(g3), as_int(d), rows, T(1), dxg.data(), as_int(g3), nx.value.data(), as_int(d),
               T(0), gw.data(), as_int(d));
          accumulate_grad(nwih, gw);
        }
        if (nx.requires_grad) {
          Tensor<T> gx(nx.value.shape());
          gemm(false, false, rows, as_int(d), as_int(g3), T(1), dxg.data(), as_int(g3), nwih.value.data(), as_int(d),
               T(0), gx.data(), as_int(d));
          accumulate_grad(nx, gx);
        }
        if (nbih.requires_grad || nbhh.requires_grad) {
          Tensor<T> gbi(nbih.value.shape());
          Tensor<T> gbh(nbhh.value.shape());
          for (std::int64_t r = 0; r < n * l; ++r) {
            for (std::int64_t j = 0; j < g3; ++j) {
              gbi[j] += dxg[r * g3 + j];
              gbh[j] += dhh_all[r * g3 + j];
            }
          }
          accumulate_grad(nbih, gbi);
          accumulate_grad(nbhh, gbh);
        }
      });
  return res;
}

#define THL_INSTANTIATE(T)                                                                                   \
  template RecurrentResult<T> lstm(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&, bool,         \
                                   const Tensor<T>*, const Tensor<T>*);                                      \
  template RecurrentResult<T> gru(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&, \
                                  bool, const Tensor<T>*);

THL_INSTANTIATE(float)
THL_INSTANTIATE(double)
#undef THL_INSTANTIATE

}  // namespace thl::ops
