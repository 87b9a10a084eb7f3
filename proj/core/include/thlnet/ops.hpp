#pragma once

// Differentiable primitives. Every op is instantiated for float (training and
// inference) and double (gradcheck). Layout conventions:
//   conv activations       [C, F, T]   (channels, frequency, time)
//   sequence activations   [N, L, D]   (batch, scan axis, features)
//   complex grids          [2, ...]    (channel 0 real, channel 1 imaginary)

#include <vector>

#include "thlnet/autograd.hpp"

namespace thl::ops {

// ---- elementwise -----------------------------------------------------------
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T s);
template <typename T> Var<T> square(const Var<T>& a);
template <typename T> Var<T> sigmoid(const Var<T>& a);
template <typename T> Var<T> tanh(const Var<T>& a);
template <typename T> Var<T> relu(const Var<T>& a);
/// Parametric ReLU with one slope per index of axis 0.
template <typename T> Var<T> prelu(const Var<T>& x, const Var<T>& slope);

// ---- reductions ------------------------------------------------------------
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);

// ---- shape -----------------------------------------------------------------
template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);
template <typename T> Var<T> permute(const Var<T>& a, const std::vector<int>& perm);
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, int axis);
template <typename T> Var<T> slice(const Var<T>& a, int axis, std::int64_t begin, std::int64_t end);

// ---- complex grids ---------------------------------------------------------
/// (a+bi)(c+di) per bin on [2, ...] grids of identical shape.
template <typename T> Var<T> complex_mul(const Var<T>& x, const Var<T>& m);
/// sqrt(re^2 + im^2); output drops the leading 2-axis. The gradient divides by sqrt(re^2 + im^2 + eps).
template <typename T> Var<T> complex_abs(const Var<T>& x, T eps);

// ---- normalization ---------------------------------------------------------
/// Normalizes over `axis`, then applies per-index gamma/beta of that axis.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, int axis, T eps = T(1e-5));

// ---- dense -----------------------------------------------------------------
/// x[..., Din] * W[Dout, Din]^T + b[Dout]. `b` may be undefined.
template <typename T> Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);

struct Conv2dOptions {
  int stride_f = 1;
  int stride_t = 1;
  int pad_f = 0;
  int dilation_f = 1;
  int dilation_t = 1;
  /// Left-pad (kT-1)*dilation_t zero frames. When false the time axis is "valid".
  bool causal = true;
};

/// x[Cin, F, T], w[Cout, Cin, kF, kT], b[Cout] (optional) -> [Cout, F', T'].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const Conv2dOptions& opt);

struct ConvTranspose2dOptions {
  int stride_f = 1;
  int pad_f = 0;
  int output_pad_f = 0;
  int dilation_t = 1;
  bool causal = true;
};

/// x[Cin, F, T], w[Cin, Cout, kF, kT] -> [Cout, (F-1)*sF - 2*pad + kF + out_pad, T'].
/// Transposed along frequency, causal convolution along time.
template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const ConvTranspose2dOptions& opt);

/// x[Cin, L], w[Cout, Cin/groups, k] -> [Cout, L]. Causal: left-pads k-1 zeros.
template <typename T>
Var<T> grouped_conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int groups);

// ---- recurrences -----------------------------------------------------------
template <typename T>
struct RecurrentResult {
  Var<T> output;        // [N, L, H]
  Tensor<T> final_h;    // [N, H]
  Tensor<T> final_c;    // [N, H] (lstm only)
};

/// LSTM over x[N, L, D]. Gate order i, f, g, o. w_ih[4H, D], w_hh[4H, H], b[4H].
/// `reverse` scans from the end. h0/c0 default to zero; they carry no gradient.
template <typename T>
RecurrentResult<T> lstm(const Var<T>& x, const Var<T>& w_ih, const Var<T>& w_hh, const Var<T>& b, bool reverse,
                        const Tensor<T>* h0 = nullptr, const Tensor<T>* c0 = nullptr);

/// GRU over x[N, L, D]. Gate order r, z, n. w_ih[3H, D], w_hh[3H, H], b_ih[3H], b_hh[3H].
/// n = tanh(W_in x + b_in + r * (W_hn h + b_hn)); h' = (1 - z) * n + z * h.
template <typename T>
RecurrentResult<T> gru(const Var<T>& x, const Var<T>& w_ih, const Var<T>& w_hh, const Var<T>& b_ih,
                       const Var<T>& b_hh, bool reverse, const Tensor<T>* h0 = nullptr);

// ---- attention -------------------------------------------------------------
struct AttentionOptions {
  int heads = 1;
  /// Lower-triangular mask along L.
  bool causal = false;
  /// With causal masking, attend to at most `context` most recent positions (0 = unbounded).
  int context = 0;
};

/// Multi-head scaled dot-product attention core on q, k, v [N, L, D]. No projections.
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionOptions& opt);

}  // namespace thl::ops
