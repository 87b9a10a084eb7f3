#include <cmath>
#include <map>

#include "doctest.h"
#include "test_util.hpp"
#include "thlnet/losses.hpp"
#include "thlnet/model.hpp"

using namespace thl;

namespace {

void set_param(Thlnet& m, const std::string& name, const std::vector<float>& values) {
  const VarF* p = m.registry().find(name);
  REQUIRE(p != nullptr);
  VarF v = *p;
  if (values.size() == 1) {
    v.mutable_value().fill(values[0]);
  } else {
    v.mutable_value().storage() = values;
  }
}

Waveform random_wave(std::uint64_t seed, std::size_t n, double amp = 0.5) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& v : w.samples) v = static_cast<float>(rng.uniform(-amp, amp));
  return w;
}

}  // namespace

TEST_CASE("two-stage chain shapes for T in {1, 7, 250}") {
  Thlnet model(reference_model_config(), 1);
  for (std::int64_t t : {1, 7, 250}) {
    NoGradGuard g;
    const StageOutputs o = model.forward(VarF(test::random_tensor({2, 256, t}, 2)));
    CHECK(o.compact_mask.shape() == Shape{2, 32, t});
    CHECK(o.m_c.shape() == Shape{2, 256, t});
    CHECK(o.s_c.shape() == Shape{2, 256, t});
    CHECK(o.m_f.shape() == Shape{2, 128, t});
    CHECK(o.s_f.shape() == Shape{2, 256, t});
    CHECK(o.s_f.value().all_finite());
  }
  CHECK_THROWS_AS(model.forward(VarF(TensorF({2, 255, 3}))), DimensionError);
}

TEST_CASE("high band of the final estimate is the first-stage estimate bit for bit") {
  for (std::uint64_t seed : {3, 4, 5}) {
    Thlnet model(tiny_model_config(), seed);
    NoGradGuard g;
    const StageOutputs o = model.forward(VarF(test::random_tensor({2, 256, 9}, seed + 10, -5, 5)));
    for (int c = 0; c < 2; ++c)
      for (int f = 128; f < 256; ++f)
        for (int t = 0; t < 9; ++t) REQUIRE(o.s_f.value().at(c, f, t) == o.s_c.value().at(c, f, t));
  }
}

TEST_CASE("identity-behaving first stage passes the input through") {
  ModelConfig cfg = reference_model_config();
  cfg.fine.enabled = false;
  Thlnet model(cfg, 6);
  set_param(model, "coarse.out.weight", {0.0f});
  set_param(model, "coarse.out.bias", {1.0f, 0.0f});
  const TensorF x = test::random_tensor({2, 256, 5}, 7);
  NoGradGuard g;
  const StageOutputs o = model.forward(VarF(x));
  CHECK(test::bit_equal(o.s_c.value(), x));
  CHECK(test::bit_equal(o.s_f.value(), x));
}

TEST_CASE("compensation: s_f low = s_c low + x low * m_f") {
  Thlnet model(tiny_model_config(), 8);
  set_param(model, "coarse.out.weight", {0.0f});
  set_param(model, "coarse.out.bias", {1.0f, 1.0f});  // m_c = 1 + 1i
  set_param(model, "fine.out.weight", {0.0f});
  set_param(model, "fine.out.bias", {0.5f, 0.0f});  // m_f = 0.5 + 0i
  TensorF x({2, 256, 1});
  for (int f = 0; f < 256; ++f) x.at(0, f, 0) = 1.0f;  // x = 1 + 0i
  NoGradGuard g;
  const StageOutputs o = model.forward(VarF(x));
  // s_c = (1 + 0i)(1 + 1i) = 1 + 1i; s_f = (1 + 1i) + (1 + 0i)(0.5 + 0i) = 1.5 + 1i
  CHECK(o.s_c.value().at(0, 5, 0) == doctest::Approx(1.0));
  CHECK(o.s_c.value().at(1, 5, 0) == doctest::Approx(1.0));
  CHECK(o.s_f.value().at(0, 5, 0) == doctest::Approx(1.5));
  CHECK(o.s_f.value().at(1, 5, 0) == doctest::Approx(1.0));
  CHECK(o.s_f.value().at(0, 200, 0) == doctest::Approx(1.0));
}

TEST_CASE("zero compensation mask leaves the first-stage estimate") {
  Thlnet model(tiny_model_config(), 9);
  set_param(model, "fine.out.weight", {0.0f});
  NoGradGuard g;
  const StageOutputs o = model.forward(VarF(test::random_tensor({2, 256, 6}, 10)));
  CHECK(test::bit_equal(o.s_f.value(), o.s_c.value()));
}

TEST_CASE("full model is prefix-causal") {
  Thlnet model(tiny_model_config(), 11);
  const TensorF x = test::random_tensor({2, 256, 16}, 12);
  TensorF x2 = x;
  for (int f = 0; f < 256; f += 3) x2.at(0, f, 10) += 1.0f;
  NoGradGuard g;
  const StageOutputs a = model.forward(VarF(x)), b = model.forward(VarF(x2));
  CHECK(test::prefix_equal(a.s_f.value(), b.s_f.value(), 10));
  CHECK_FALSE(test::prefix_equal(a.s_f.value(), b.s_f.value(), 11));
}

TEST_CASE("offline enhancement preserves length and maps silence to silence") {
  Thlnet model(tiny_model_config(), 13);
  const Waveform w = random_wave(14, 5000);
  const Waveform y = enhance_offline(model, w);
  CHECK(y.size() == w.size());
  for (float v : y.samples) REQUIRE(std::isfinite(v));
  Waveform z;
  z.samples.assign(3000, 0.0f);
  for (float v : enhance_offline(model, z).samples) CHECK(v == 0.0f);
}

TEST_CASE("streaming matches offline") {
  Thlnet model(tiny_model_config(), 15);
  const Waveform w = random_wave(16, 8000 + 100);
  const Waveform off = enhance_offline(model, w);
  const Waveform on = enhance_streaming(model, w);
  REQUIRE(on.size() == off.size());
  CHECK(test::max_abs_diff(on.samples, off.samples) <= 1e-4);
}

TEST_CASE("stream latency, reset and determinism") {
  Thlnet model(tiny_model_config(), 17);
  const Waveform w = random_wave(18, 256 * 12);
  const Waveform off = enhance_offline(model, w);
  StreamingEnhancer se(model);
  std::vector<std::array<float, kHop>> first;
  for (int k = 0; k < 12; ++k) first.push_back(se.process(std::span<const float>(w.samples).subspan(k * kHop, kHop)));
  CHECK(se.frames_processed() == 12);
  for (float v : first[0]) CHECK(v == 0.0f);  // one hop of lag
  double worst = 0.0;
  for (int n = 0; n < kHop; ++n) worst = std::max(worst, std::abs(static_cast<double>(first[1][n]) - off.samples[n]));
  CHECK(worst <= 1e-4);

  se.reset();
  CHECK(se.frames_processed() == 0);
  for (int k = 0; k < 12; ++k) {
    const auto again = se.process(std::span<const float>(w.samples).subspan(k * kHop, kHop));
    CHECK(again == first[k]);
  }
  CHECK_THROWS_AS(se.process(std::vector<float>(100)), DimensionError);
}

TEST_CASE("every parameter receives a gradient; each stage loss reaches the right parameters") {
  Thlnet model(tiny_model_config(), 19);
  const VarF x(test::random_tensor({2, 256, 6}, 20));
  const VarF target(test::random_tensor({2, 256, 6}, 21));
  auto grad_norms = [&](int which) {
    for (const auto& [name, v] : model.registry().entries()) VarF(v).zero_grad();
    const StageOutputs o = model.forward(x);
    const LossTerms<float> l = loss_total(o.s_c, o.s_f, target, LossConfig{});
    backward(which == 0 ? l.total : which == 1 ? l.coarse : l.fine);
    std::map<std::string, double> n;
    for (const auto& [name, v] : model.registry().entries()) {
      double a = 0.0;
      if (v.has_grad())
        for (float g : v.grad().values()) a += std::abs(g);
      n[name] = a;
    }
    return n;
  };
  for (const auto& kv : grad_norms(0)) {
    INFO(kv.first);
    CHECK(kv.second > 0.0);
  }
  for (const auto& kv : grad_norms(1)) {
    INFO(kv.first);
    if (kv.first.rfind("fine.", 0) == 0) {
      CHECK(kv.second == 0.0);
    } else {
      CHECK(kv.second > 0.0);
    }
  }
  for (const auto& kv : grad_norms(2)) {
    INFO(kv.first);
    CHECK(kv.second > 0.0);  // the fine loss also flows into the first stage through s_c
  }
}
