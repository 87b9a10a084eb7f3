#include <algorithm>

#include "doctest.h"
#include "test_util.hpp"
#include "thlnet/coarsenet.hpp"
#include "thlnet/finenet.hpp"

using namespace thl;

namespace {

void set_param(nn::ParamRegistry& reg, const std::string& name, const std::vector<float>& values) {
  const VarF* p = reg.find(name);
  REQUIRE(p != nullptr);
  VarF v = *p;
  if (values.size() == 1) {
    v.mutable_value().fill(values[0]);
  } else {
    REQUIRE(values.size() == v.numel());
    v.mutable_value().storage() = values;
  }
}

}  // namespace

TEST_CASE("coarse net keeps the compact shape and follows 32 -> 16 -> 8 -> 8") {
  nn::ParamRegistry reg(1);
  CoarseNet net(reg, CoarseConfig{}, 32);
  CHECK(net.freq_sizes() == std::vector<int>{32, 16, 8, 8});
  VarF y = net(VarF(test::random_tensor({2, 32, 100}, 2)));
  CHECK(y.shape() == Shape{2, 32, 100});
  CHECK(y.value().all_finite());
}

TEST_CASE("coarse net with a zeroed output conv predicts a zero mask") {
  nn::ParamRegistry reg(3);
  CoarseNet net(reg, CoarseConfig{}, 32);
  set_param(reg, "coarse.out.weight", {0.0f});
  VarF y = net(VarF(test::random_tensor({2, 32, 9}, 4)));
  for (float v : y.value().values()) CHECK(v == 0.0f);
}

TEST_CASE("coarse net is prefix-causal in time") {
  nn::ParamRegistry reg(5);
  CoarseNet net(reg, CoarseConfig{}, 32);
  const TensorF x = test::random_tensor({2, 32, 20}, 6);
  TensorF x2 = x;
  for (int c = 0; c < 2; ++c)
    for (int f = 0; f < 32; ++f) x2.at(c, f, 12) += 0.3f;
  CHECK(test::prefix_equal(net(VarF(x)).value(), net(VarF(x2)).value(), 12));
}

TEST_CASE("coarse net streaming chunks reproduce the whole-sequence output") {
  nn::ParamRegistry reg(7);
  CoarseNet net(reg, CoarseConfig{}, 32);
  const TensorF x = test::random_tensor({2, 32, 12}, 8);
  const TensorF full = net(VarF(x)).value();
  CoarseStreamState st = net.initial_state();
  double worst = 0.0;
  for (int t = 0; t < 12; ++t) {
    TensorF frame({2, 32, 1});
    for (int c = 0; c < 2; ++c)
      for (int f = 0; f < 32; ++f) frame.at(c, f, 0) = x.at(c, f, t);
    const TensorF y = net(VarF(frame), &st).value();
    for (int c = 0; c < 2; ++c)
      for (int f = 0; f < 32; ++f) worst = std::max(worst, std::abs(static_cast<double>(y.at(c, f, 0)) - full.at(c, f, t)));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("fine net maps two low bands to one mask") {
  nn::ParamRegistry reg(9);
  FineNet net(reg, FineConfig{});
  VarF y = net(VarF(test::random_tensor({2, 128, 50}, 10)), VarF(test::random_tensor({2, 128, 50}, 11)));
  CHECK(y.shape() == Shape{2, 128, 50});
  CHECK_THROWS_AS(net(VarF(TensorF({2, 128, 5})), VarF(TensorF({2, 128, 6}))), DimensionError);
  CHECK_THROWS_AS(net(VarF(TensorF({2, 64, 5})), VarF(TensorF({2, 64, 5}))), DimensionError);
}

TEST_CASE("fine net never resamples frequency") {
  nn::ParamRegistry reg(12);
  FineNet net(reg, FineConfig{});
  std::vector<Shape> trace;
  net.set_shape_trace(&trace);
  net(VarF(test::random_tensor({2, 128, 7}, 13)), VarF(test::random_tensor({2, 128, 7}, 14)));
  net.set_shape_trace(nullptr);
  // input conv + 3 encoder layers + 2 per dual-path block + 3 decoder layers + output conv
  CHECK(trace.size() == 1 + 3 + 2 * 2 + 3 + 1);
  for (const auto& s : trace) {
    INFO(shape_str(s));
    CHECK(s.size() == 3);
    CHECK(std::count(s.begin(), s.end(), 128) == 1);
  }
}

TEST_CASE("fine net with a zeroed output conv gives a zero compensation mask") {
  nn::ParamRegistry reg(15);
  FineNet net(reg, FineConfig{});
  set_param(reg, "fine.out.weight", {0.0f});
  VarF y = net(VarF(test::random_tensor({2, 128, 4}, 16)), VarF(test::random_tensor({2, 128, 4}, 17)));
  for (float v : y.value().values()) CHECK(v == 0.0f);
}

TEST_CASE("fine net: perturbing frame 30 leaves frames 0..29 bit-identical") {
  nn::ParamRegistry reg(18);
  FineConfig cfg;
  cfg.dp_blocks = 1;
  FineNet net(reg, cfg);
  const TensorF a = test::random_tensor({2, 128, 40}, 19), b = test::random_tensor({2, 128, 40}, 20);
  const TensorF y0 = net(VarF(a), VarF(b)).value();
  for (int which = 0; which < 2; ++which) {
    TensorF a2 = a, b2 = b;
    TensorF& p = which == 0 ? a2 : b2;
    for (int f = 0; f < 128; f += 5) p.at(1, f, 30) -= 0.7f;
    const TensorF y1 = net(VarF(a2), VarF(b2)).value();
    CHECK(test::prefix_equal(y0, y1, 30));
    CHECK_FALSE(test::prefix_equal(y0, y1, 31));
  }
}
