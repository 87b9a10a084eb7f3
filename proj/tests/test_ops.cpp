#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "thlnet/ops.hpp"

using namespace thl;
using test::random_tensor;

namespace {

// Direct-loop references. Causal conv: tap kT-1 sees the current frame.
TensorF conv2d_reference(const TensorF& x, const TensorF& w, const TensorF& b, const ops::Conv2dOptions& o) {
  const std::int64_t cin = x.dim(0), f = x.dim(1), t = x.dim(2);
  const std::int64_t cout = w.dim(0), kf = w.dim(2), kt = w.dim(3);
  const std::int64_t fo = (f + 2 * o.pad_f - o.dilation_f * (kf - 1) - 1) / o.stride_f + 1;
  TensorF out({cout, fo, t});
  for (std::int64_t co = 0; co < cout; ++co)
    for (std::int64_t i = 0; i < fo; ++i)
      for (std::int64_t tt = 0; tt < t; ++tt) {
        double acc = b.numel() ? b[co] : 0.0;
        for (std::int64_t ci = 0; ci < cin; ++ci)
          for (std::int64_t a = 0; a < kf; ++a)
            for (std::int64_t c = 0; c < kt; ++c) {
              const std::int64_t fi = i * o.stride_f - o.pad_f + a * o.dilation_f;
              const std::int64_t ti = tt - (kt - 1 - c) * o.dilation_t;
              if (fi < 0 || fi >= f || ti < 0) continue;
              acc += static_cast<double>(w[((co * cin + ci) * kf + a) * kt + c]) * x.at(ci, fi, ti);
            }
        out.at(co, i, tt) = static_cast<float>(acc);
      }
  return out;
}

// Transposed along frequency; tap 0 sees the current frame.
TensorF conv_transpose_reference(const TensorF& x, const TensorF& w, const ops::ConvTranspose2dOptions& o) {
  const std::int64_t cin = x.dim(0), f = x.dim(1), t = x.dim(2);
  const std::int64_t cout = w.dim(1), kf = w.dim(2), kt = w.dim(3);
  const std::int64_t fo = (f - 1) * o.stride_f - 2 * o.pad_f + kf + o.output_pad_f;
  TensorF out({cout, fo, t});
  for (std::int64_t ci = 0; ci < cin; ++ci)
    for (std::int64_t fi = 0; fi < f; ++fi)
      for (std::int64_t tt = 0; tt < t; ++tt)
        for (std::int64_t co = 0; co < cout; ++co)
          for (std::int64_t a = 0; a < kf; ++a)
            for (std::int64_t c = 0; c < kt; ++c) {
              const std::int64_t of = fi * o.stride_f - o.pad_f + a;
              const std::int64_t ot = tt + c * o.dilation_t;
              if (of < 0 || of >= fo || ot >= t) continue;
              out.at(co, of, ot) += w[((ci * cout + co) * kf + a) * kt + c] * x.at(ci, fi, tt);
            }
  return out;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST_CASE("conv2d output shape follows the frequency formula") {
  ops::Conv2dOptions o;
  o.stride_f = 2;
  o.pad_f = 2;
  VarF y = ops::conv2d(VarF(random_tensor({2, 32, 10}, 1)), VarF(random_tensor({64, 2, 5, 2}, 2)), VarF(), o);
  CHECK(y.shape() == Shape{64, 16, 10});
}

TEST_CASE("conv2d with a unit 1x1 kernel is the identity") {
  const TensorF x = random_tensor({1, 1, 9}, 3);
  VarF y = ops::conv2d(VarF(x), VarF(TensorF({1, 1, 1, 1}, 1.0f)), VarF(), {});
  CHECK(test::bit_equal(y.value(), x));
}

TEST_CASE("conv2d matches the direct-loop reference") {
  for (int variant = 0; variant < 3; ++variant) {
    ops::Conv2dOptions o;
    o.stride_f = variant == 1 ? 2 : 1;
    o.pad_f = 1;
    o.dilation_t = variant == 2 ? 3 : 1;
    o.dilation_f = variant == 2 ? 2 : 1;
    const TensorF x = random_tensor({3, 9, 11}, 10 + variant);
    const TensorF w = random_tensor({4, 3, 3, 2}, 20 + variant);
    const TensorF b = random_tensor({4}, 30 + variant);
    VarF y = ops::conv2d(VarF(x), VarF(w), VarF(b), o);
    const TensorF ref = conv2d_reference(x, w, b, o);
    REQUIRE(y.shape() == ref.shape());
    CHECK(test::max_abs_diff(y.value(), ref) < 1e-5);
  }
}

TEST_CASE("conv2d rejects mismatched channels") {
  CHECK_THROWS_AS(ops::conv2d(VarF(TensorF({3, 8, 4})), VarF(TensorF({4, 2, 3, 2})), VarF(), {}), DimensionError);
}

TEST_CASE("transposed conv restores the encoder frequency size") {
  ops::ConvTranspose2dOptions o;
  o.stride_f = 2;
  o.pad_f = 2;
  o.output_pad_f = 1;  // (16-1)*2 - 4 + 5 = 31, one more to reach 32
  VarF y = ops::conv_transpose2d(VarF(random_tensor({64, 16, 10}, 4)), VarF(random_tensor({64, 64, 5, 2}, 5)),
                                 VarF(), o);
  CHECK(y.shape() == Shape{64, 32, 10});
}

TEST_CASE("transposed conv with a unit kernel is the identity") {
  const TensorF x = random_tensor({1, 5, 7}, 6);
  VarF y = ops::conv_transpose2d(VarF(x), VarF(TensorF({1, 1, 1, 1}, 1.0f)), VarF(), {});
  CHECK(test::bit_equal(y.value(), x));
}

TEST_CASE("transposed conv matches the direct-loop reference") {
  ops::ConvTranspose2dOptions o;
  o.stride_f = 2;
  o.pad_f = 1;
  o.output_pad_f = 1;
  o.dilation_t = 2;
  const TensorF x = random_tensor({3, 5, 8}, 7);
  const TensorF w = random_tensor({3, 2, 3, 2}, 8);
  VarF y = ops::conv_transpose2d(VarF(x), VarF(w), VarF(), o);
  const TensorF ref = conv_transpose_reference(x, w, o);
  REQUIRE(y.shape() == ref.shape());
  CHECK(test::max_abs_diff(y.value(), ref) < 1e-5);
}

TEST_CASE("transposed conv rejects an output padding as large as the stride") {
  ops::ConvTranspose2dOptions o;
  o.stride_f = 2;
  o.output_pad_f = 2;
  CHECK_THROWS_AS(ops::conv_transpose2d(VarF(TensorF({1, 4, 3})), VarF(TensorF({1, 1, 3, 1})), VarF(), o),
                  ConfigError);
}

TEST_CASE("conv ops are prefix-causal along time") {
  const TensorF x = random_tensor({2, 6, 12}, 9);
  TensorF x2 = x;
  for (std::int64_t c = 0; c < 2; ++c)
    for (std::int64_t f = 0; f < 6; ++f)
      for (std::int64_t t = 7; t < 12; ++t) x2.at(c, f, t) += 1.0f;
  ops::Conv2dOptions o;
  o.pad_f = 1;
  o.dilation_t = 2;
  const TensorF w = random_tensor({3, 2, 3, 3}, 10);
  CHECK(test::prefix_equal(ops::conv2d(VarF(x), VarF(w), VarF(), o).value(),
                           ops::conv2d(VarF(x2), VarF(w), VarF(), o).value(), 7));
  ops::ConvTranspose2dOptions ot;
  ot.stride_f = 2;
  const TensorF wt = random_tensor({2, 3, 2, 3}, 11);
  CHECK(test::prefix_equal(ops::conv_transpose2d(VarF(x), VarF(wt), VarF(), ot).value(),
                           ops::conv_transpose2d(VarF(x2), VarF(wt), VarF(), ot).value(), 7));
}

TEST_CASE("grouped conv1d: identity with unit depthwise weights") {
  const TensorF x = random_tensor({6, 5}, 12);
  VarF y = ops::grouped_conv1d(VarF(x), VarF(TensorF({6, 1, 1}, 1.0f)), VarF(), 6);
  CHECK(test::bit_equal(y.value(), x));
}

TEST_CASE("grouped conv1d: two groups of two channels by hand") {
  // x channels: a=[1,2], b=[3,4] (group 0), c=[5,6], d=[7,8] (group 1). One output per group, k = 1.
  TensorF x({4, 2}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8});
  TensorF w({2, 2, 1}, std::vector<float>{2, -1, 0.5f, 3});
  VarF y = ops::grouped_conv1d(VarF(x), VarF(w), VarF(), 2);
  REQUIRE(y.shape() == Shape{2, 2});
  CHECK(y.value()[0] == doctest::Approx(2 * 1 - 1 * 3));
  CHECK(y.value()[1] == doctest::Approx(2 * 2 - 1 * 4));
  CHECK(y.value()[2] == doctest::Approx(0.5 * 5 + 3 * 7));
  CHECK(y.value()[3] == doctest::Approx(0.5 * 6 + 3 * 8));
}

TEST_CASE("grouped conv1d: 256 channels in 32 groups give per-group weighted sums") {
  const TensorF x = random_tensor({256, 3}, 13);
  const TensorF w = random_tensor({32, 8, 1}, 14);
  VarF y = ops::grouped_conv1d(VarF(x), VarF(w), VarF(), 32);
  REQUIRE(y.shape() == Shape{32, 3});
  double worst = 0.0;
  for (int p = 0; p < 32; ++p)
    for (int t = 0; t < 3; ++t) {
      double acc = 0.0;
      for (int g = 0; g < 8; ++g) acc += static_cast<double>(w[p * 8 + g]) * x[(p * 8 + g) * 3 + t];
      worst = std::max(worst, std::abs(acc - y.value()[p * 3 + t]));
    }
  CHECK(worst < 1e-5);
}

TEST_CASE("grouped conv1d: causal taps") {
  TensorF x({1, 4}, std::vector<float>{1, 2, 3, 4});
  TensorF w({1, 1, 2}, std::vector<float>{10, 1});  // tap 1 is the current sample
  VarF y = ops::grouped_conv1d(VarF(x), VarF(w), VarF(), 1);
  CHECK(y.value().storage() == std::vector<float>{1, 12, 23, 34});
}

TEST_CASE("grouped conv1d: zeroing one group's inputs zeroes exactly that group's outputs") {
  const int groups = 4;
  TensorF x = random_tensor({8, 6}, 15);
  const TensorF w = random_tensor({12, 2, 2}, 16);
  for (int g = 0; g < groups; ++g) {
    TensorF xz = x;
    for (int c = 2 * g; c < 2 * g + 2; ++c)
      for (int t = 0; t < 6; ++t) xz[c * 6 + t] = 0.0f;
    const TensorF y = ops::grouped_conv1d(VarF(xz), VarF(w), VarF(), groups).value();
    for (int co = 0; co < 12; ++co) {
      bool all_zero = true;
      for (int t = 0; t < 6; ++t) all_zero = all_zero && y[co * 6 + t] == 0.0f;
      CHECK(all_zero == (co / 3 == g));
    }
  }
}

TEST_CASE("grouped conv1d rejects indivisible channels") {
  CHECK_THROWS_AS(ops::grouped_conv1d(VarF(TensorF({6, 2})), VarF(TensorF({4, 2, 1})), VarF(), 4), DimensionError);
}

TEST_CASE("lstm with zero input, state and weights outputs zero") {
  const int h = 3;
  auto r = ops::lstm(VarF(TensorF({2, 4, 5})), VarF(TensorF({4 * h, 5})), VarF(TensorF({4 * h, h})),
                     VarF(TensorF({4 * h})), false);
  for (float v : r.output.value().values()) CHECK(v == 0.0f);
  for (float v : r.final_c.values()) CHECK(v == 0.0f);
}

TEST_CASE("single-unit gru by hand") {
  const double wr = 0.5, wz = -0.5, wn = 1.0, ur = 0.3, uz = 0.2, un = -0.4;
  const double bir = 0.1, biz = -0.2, bin = 0.05, bhr = 0.0, bhz = 0.1, bhn = 0.2;
  TensorF x({1, 2, 1}, std::vector<float>{1.0f, 2.0f});
  auto r = ops::gru(VarF(x), VarF(TensorF({3, 1}, std::vector<float>{0.5f, -0.5f, 1.0f})),
                    VarF(TensorF({3, 1}, std::vector<float>{0.3f, 0.2f, -0.4f})),
                    VarF(TensorF({3}, std::vector<float>{0.1f, -0.2f, 0.05f})),
                    VarF(TensorF({3}, std::vector<float>{0.0f, 0.1f, 0.2f})), false);
  double h = 0.0;
  for (int t = 0; t < 2; ++t) {
    const double xv = x[t];
    const double rg = sigmoid(wr * xv + bir + ur * h + bhr);
    const double zg = sigmoid(wz * xv + biz + uz * h + bhz);
    const double ng = std::tanh(wn * xv + bin + rg * (un * h + bhn));
    h = (1 - zg) * ng + zg * h;
    CHECK(r.output.value()[t] == doctest::Approx(h).epsilon(1e-6));
  }
  CHECK(r.final_h[0] == doctest::Approx(h).epsilon(1e-6));
}

TEST_CASE("single-unit lstm by hand") {
  TensorF x({1, 3, 1}, std::vector<float>{0.5f, -1.0f, 2.0f});
  const std::vector<float> wi{0.4f, -0.3f, 0.8f, 0.1f}, wh{0.2f, 0.5f, -0.6f, 0.3f}, b{0.0f, 0.5f, -0.1f, 0.2f};
  auto r = ops::lstm(VarF(x), VarF(TensorF({4, 1}, wi)), VarF(TensorF({4, 1}, wh)), VarF(TensorF({4}, b)), false);
  double h = 0.0, c = 0.0;
  for (int t = 0; t < 3; ++t) {
    const double xv = x[t];
    const double i = sigmoid(wi[0] * xv + wh[0] * h + b[0]);
    const double f = sigmoid(wi[1] * xv + wh[1] * h + b[1]);
    const double g = std::tanh(wi[2] * xv + wh[2] * h + b[2]);
    const double o = sigmoid(wi[3] * xv + wh[3] * h + b[3]);
    c = f * c + i * g;
    h = o * std::tanh(c);
    CHECK(r.output.value()[t] == doctest::Approx(h).epsilon(1e-6));
  }
  CHECK(r.final_c[0] == doctest::Approx(c).epsilon(1e-6));
}

TEST_CASE("float recurrences agree with the double path") {
  const TensorF x = random_tensor({3, 20, 4}, 17, -3, 3);
  const TensorF wih = random_tensor({15, 4}, 18), whh = random_tensor({15, 5}, 19);
  const TensorF bi = random_tensor({15}, 20), bh = random_tensor({15}, 21);
  auto f = ops::gru(VarF(x), VarF(wih), VarF(whh), VarF(bi), VarF(bh), true);
  auto d = ops::gru(VarD(x.cast<double>()), VarD(wih.cast<double>()), VarD(whh.cast<double>()),
                    VarD(bi.cast<double>()), VarD(bh.cast<double>()), true);
  CHECK(test::max_abs_diff(f.output.value().cast<double>(), d.output.value()) < 1e-5);
}

TEST_CASE("recurrences are prefix-causal and resume from their final state") {
  const TensorF x = random_tensor({2, 10, 3}, 22);
  const TensorF wih = random_tensor({16, 3}, 23), whh = random_tensor({16, 4}, 24), b = random_tensor({16}, 25);
  auto full = ops::lstm(VarF(x), VarF(wih), VarF(whh), VarF(b), false);
  // First 6 steps, then the remaining 4 from the carried state.
  TensorF a({2, 6, 3}), c({2, 4, 3});
  for (int n = 0; n < 2; ++n)
    for (int t = 0; t < 10; ++t)
      for (int j = 0; j < 3; ++j) (t < 6 ? a.at(n, t, j) : c.at(n, t - 6, j)) = x.at(n, t, j);
  auto first = ops::lstm(VarF(a), VarF(wih), VarF(whh), VarF(b), false);
  auto second = ops::lstm(VarF(c), VarF(wih), VarF(whh), VarF(b), false, &first.final_h, &first.final_c);
  for (int n = 0; n < 2; ++n)
    for (int t = 0; t < 10; ++t)
      for (int j = 0; j < 4; ++j) {
        const float chunked = t < 6 ? first.output.value().at(n, t, j) : second.output.value().at(n, t - 6, j);
        CHECK(chunked == full.output.value().at(n, t, j));
      }
  TensorF x2 = x;
  for (int n = 0; n < 2; ++n) x2.at(n, 8, 1) += 0.5f;
  auto pert = ops::gru(VarF(x2), VarF(random_tensor({12, 3}, 26)), VarF(random_tensor({12, 4}, 27)),
                       VarF(TensorF({12})), VarF(TensorF({12})), false);
  auto base = ops::gru(VarF(x), VarF(random_tensor({12, 3}, 26)), VarF(random_tensor({12, 4}, 27)),
                       VarF(TensorF({12})), VarF(TensorF({12})), false);
  for (int n = 0; n < 2; ++n)
    for (int t = 0; t < 8; ++t)
      for (int j = 0; j < 4; ++j) CHECK(pert.output.value().at(n, t, j) == base.output.value().at(n, t, j));
}

TEST_CASE("attention over one position returns the value row") {
  const TensorF v = random_tensor({2, 1, 4}, 28);
  ops::AttentionOptions o;
  o.heads = 2;
  VarF y = ops::attention(VarF(random_tensor({2, 1, 4}, 29)), VarF(random_tensor({2, 1, 4}, 30)), VarF(v), o);
  CHECK(test::max_abs_diff(y.value(), v) < 1e-6);
}

TEST_CASE("attention 2x2 with orthogonal queries") {
  TensorF eye({1, 2, 2}, std::vector<float>{1, 0, 0, 1});
  TensorF v({1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  const double s = 1.0 / std::sqrt(2.0);
  const double a = std::exp(s) / (std::exp(s) + 1.0), b = 1.0 - a;
  VarF y = ops::attention(VarF(eye), VarF(eye), VarF(v), {});
  CHECK(y.value()[0] == doctest::Approx(a * 1 + b * 3));
  CHECK(y.value()[1] == doctest::Approx(a * 2 + b * 4));
  CHECK(y.value()[2] == doctest::Approx(b * 1 + a * 3));
  CHECK(y.value()[3] == doctest::Approx(b * 2 + a * 4));

  ops::AttentionOptions causal;
  causal.causal = true;
  VarF yc = ops::attention(VarF(eye), VarF(eye), VarF(v), causal);
  CHECK(yc.value()[0] == doctest::Approx(1.0));
  CHECK(yc.value()[1] == doctest::Approx(2.0));
  CHECK(yc.value()[2] == doctest::Approx(b * 1 + a * 3));
}

TEST_CASE("causal attention with a context cap ignores older positions") {
  const TensorF q = random_tensor({1, 6, 2}, 31), k = random_tensor({1, 6, 2}, 32);
  TensorF v = random_tensor({1, 6, 2}, 33);
  ops::AttentionOptions o;
  o.causal = true;
  o.context = 2;
  const TensorF y0 = ops::attention(VarF(q), VarF(k), VarF(v), o).value();
  v.at(0, 0, 0) += 5.0f;  // position 0 is outside the window of positions >= 2
  const TensorF y1 = ops::attention(VarF(q), VarF(k), VarF(v), o).value();
  for (int t = 2; t < 6; ++t) CHECK(y0.at(0, t, 0) == y1.at(0, t, 0));
  CHECK(y0.at(0, 0, 0) != y1.at(0, 0, 0));
}

TEST_CASE("complex multiply by hand") {
  TensorF x({2, 1, 1}, std::vector<float>{3, 4});
  TensorF m({2, 1, 1}, std::vector<float>{2, -1});
  VarF y = ops::complex_mul(VarF(x), VarF(m));
  CHECK(y.value()[0] == 10.0f);
  CHECK(y.value()[1] == 5.0f);
  VarF r = ops::complex_mul(VarF(TensorF({2, 1, 1}, std::vector<float>{1, 0})),
                            VarF(TensorF({2, 1, 1}, std::vector<float>{0, 1})));
  CHECK(r.value().storage() == std::vector<float>{0, 1});
}

TEST_CASE("complex_abs is exact at scale and finite at zero") {
  TensorF x({2, 2}, std::vector<float>{3, 0, 4, 0});
  VarF xv(x, true);
  VarF a = ops::complex_abs(xv, 1e-9f);
  CHECK(a.value()[0] == doctest::Approx(5.0).epsilon(1e-7));
  CHECK(a.value()[1] == 0.0f);
  backward(ops::sum(a));
  CHECK(xv.grad().all_finite());
  CHECK(xv.grad()[0] == doctest::Approx(0.6));
}

TEST_CASE("layer norm over an axis") {
  TensorF x({2, 3, 1}, std::vector<float>{1, 2, 3, 5, 6, 10});
  VarF y = ops::layer_norm(VarF(x), VarF(TensorF({2}, 1.0f)), VarF(TensorF({2}, 0.0f)), 0);
  // Pairs along axis 0: (1,5), (2,6), (3,10) normalize to (-1, 1) up to eps.
  for (int i = 0; i < 3; ++i) {
    CHECK(y.value()[i] == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(y.value()[3 + i] == doctest::Approx(1.0).epsilon(1e-3));
  }
  VarF z = ops::layer_norm(VarF(x), VarF(TensorF({1}, 2.0f)), VarF(TensorF({1}, 0.5f)), -1);
  CHECK(z.value()[0] == doctest::Approx(0.5).epsilon(1e-6));  // single element normalizes to 0
}

TEST_CASE("prelu uses one slope per leading index") {
  TensorF x({2, 2}, std::vector<float>{-1, 2, -4, 3});
  VarF y = ops::prelu(VarF(x), VarF(TensorF({2}, std::vector<float>{0.25f, 0.5f})));
  CHECK(y.value().storage() == std::vector<float>{-0.25f, 2, -2, 3});
}
