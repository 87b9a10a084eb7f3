#include <algorithm>
#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "thlnet/gradcheck.hpp"
#include "thlnet/ops.hpp"

using namespace thl;

TEST_CASE("gradcheck of the identity has no error") {
  auto r = gradcheck("id", [](const std::vector<VarD>& in) { return ops::reshape(in[0], {6}); },
                     {test::random_tensor_d({2, 3}, 1)});
  CHECK(r.pass);
  CHECK(r.max_rel_error < 1e-9);
  CHECK(r.elements_checked == 6);
}

TEST_CASE("gradcheck passes grouped conv1d with random weights") {
  auto r = gradcheck(
      "grouped_conv1d",
      [](const std::vector<VarD>& in) { return ops::grouped_conv1d(in[0], in[1], in[2], 2); },
      {test::random_tensor_d({4, 5}, 2), test::random_tensor_d({6, 2, 2}, 3), test::random_tensor_d({6}, 4)});
  CHECK(r.pass);
}

TEST_CASE("gradcheck rejects a sign-flipped backward") {
  auto r = gradcheck("flipped", [](const std::vector<VarD>& in) { return flip_grad_sign(ops::square(in[0])); },
                     {test::random_tensor_d({3}, 5, 0.5, 1.0)});
  CHECK_FALSE(r.pass);
  CHECK(r.max_rel_error > 1.0);
}

TEST_CASE("gradcheck refuses an output without a backward") {
  CHECK_THROWS_AS(gradcheck("leaf", [](const std::vector<VarD>&) { return VarD(TensorD({1}, 1.0)); },
                            {test::random_tensor_d({1}, 6)}),
                  GraphError);
}

TEST_CASE("the gradcheck suite covers every primitive and passes") {
  const auto reports = run_gradcheck_suite(0);
  std::set<std::string> names;
  for (const auto& r : reports) {
    names.insert(r.name);
    INFO(r.name << " max rel error " << r.max_rel_error);
    CHECK(r.pass);
    CHECK(r.max_rel_error < 1e-5);
  }
  for (const char* required : {"conv2d_causal", "conv_transpose2d", "grouped_conv1d", "complex_grouped_conv1d", "lstm",
                               "gru", "attention_causal", "layer_norm_channels", "sigmoid", "tanh", "prelu",
                               "loss_ri", "loss_mag", "loss_stage", "loss_total"}) {
    CHECK_MESSAGE(names.count(required) == 1, required);
  }
}

TEST_CASE("the gradcheck suite flags a corrupted op by name") {
  const auto reports = run_gradcheck_suite(0, "gru");
  for (const auto& r : reports) CHECK(r.pass == (r.name != "gru"));
  CHECK_THROWS_AS(run_gradcheck_suite(0, "no_such_op"), ConfigError);
}
