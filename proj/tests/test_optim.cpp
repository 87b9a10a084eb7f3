#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "thlnet/optim.hpp"

using namespace thl;

namespace {

VarF param_with_grad(TensorF value, TensorF grad) {
  VarF p(std::move(value), true);
  p.mutable_grad() = std::move(grad);
  return p;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged and counts the step") {
  const TensorF w0 = test::random_tensor({3, 4}, 1);
  VarF p = param_with_grad(w0, TensorF({3, 4}));
  VarF q(TensorF({2}, 1.0f), true);  // never received a gradient
  Adam adam({p, q});
  adam.step();
  CHECK(adam.step_count() == 1);
  CHECK(test::bit_equal(p.value(), w0));
  CHECK(q.value()[0] == 1.0f);
}

TEST_CASE("adam: zero gradients are a fixed point over many steps") {
  const TensorF w0 = test::random_tensor({5}, 2);
  VarF p = param_with_grad(w0, TensorF({5}));
  Adam adam({p});
  for (int i = 0; i < 50; ++i) adam.step();
  CHECK(test::bit_equal(p.value(), w0));
}

TEST_CASE("adam: first step with a constant gradient moves by -lr * sign(g)") {
  TensorF g({4}, std::vector<float>{3.0f, -0.01f, 250.0f, -7.0f});
  VarF p = param_with_grad(TensorF({4}), g);
  Adam adam({p}, AdamOptions{});
  adam.step();
  const double lr = 4e-4;
  for (int i = 0; i < 4; ++i) {
    const double expected = -lr * (g[i] > 0 ? 1.0 : -1.0);
    CHECK(p.value()[i] == doctest::Approx(expected).epsilon(1e-4));
  }
}

TEST_CASE("adam: bias-corrected moments follow the closed form for a constant gradient") {
  // With g constant, m_t/c1 = g and v_t/c2 = g^2 at every step, so each step moves by lr*g/(|g|+eps').
  VarF p = param_with_grad(TensorF({1}), TensorF({1}, 0.5f));
  Adam adam({p}, AdamOptions{1e-2f, 0.9f, 0.999f, 1e-8f});
  for (int i = 0; i < 10; ++i) adam.step();
  CHECK(p.value()[0] == doctest::Approx(-0.1).epsilon(1e-4));
  CHECK(adam.first_moment()[0][0] == doctest::Approx(0.5 * (1 - std::pow(0.9, 10))).epsilon(1e-5));
}

TEST_CASE("clip_global_norm: below the bound nothing changes") {
  VarF p = param_with_grad(TensorF({2}), TensorF({2}, std::vector<float>{0.0f, 3.0f}));
  std::vector<VarF> ps{p};
  CHECK(clip_global_norm(ps, 5.0) == doctest::Approx(3.0));
  CHECK(p.grad()[1] == 3.0f);
}

TEST_CASE("clip_global_norm: norm 10 against 5 halves every element") {
  VarF a = param_with_grad(TensorF({1}), TensorF({1}, 6.0f));
  VarF b = param_with_grad(TensorF({1}), TensorF({1}, 8.0f));
  std::vector<VarF> ps{a, b};
  CHECK(clip_global_norm(ps, 5.0) == doctest::Approx(10.0));
  CHECK(a.grad()[0] == doctest::Approx(3.0));
  CHECK(b.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("clip_global_norm: clipped norm never exceeds the bound") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const double scale = std::pow(10.0, static_cast<double>(seed % 7) - 2.0);
    VarF a = param_with_grad(TensorF({7, 3}), test::random_tensor({7, 3}, seed, -scale, scale));
    VarF b = param_with_grad(TensorF({11}), test::random_tensor({11}, seed + 100, -scale, scale));
    std::vector<VarF> ps{a, b};
    clip_global_norm(ps, 5.0);
    CHECK(global_grad_norm(ps) <= 5.0 + 1e-6);
  }
}

TEST_CASE("lr schedule decays every two epochs") {
  CHECK(lr_schedule(4e-4, 0) == doctest::Approx(4e-4));
  CHECK(lr_schedule(4e-4, 1) == doctest::Approx(4e-4));
  CHECK(lr_schedule(4e-4, 4) == doctest::Approx(0.00038416).epsilon(1e-12));
  CHECK(lr_schedule(4e-4, 5) == lr_schedule(4e-4, 4));
  CHECK_THROWS_AS(lr_schedule(4e-4, -1), ConfigError);
}
