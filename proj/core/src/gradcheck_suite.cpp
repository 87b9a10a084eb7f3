#include <cmath>

#include "thlnet/gradcheck.hpp"
#include "thlnet/losses.hpp"
#include "thlnet/ops.hpp"
#include "thlnet/random.hpp"

namespace thl {

namespace {

using In = const std::vector<VarD>&;

struct Case {
  std::string name;
  std::vector<Shape> shapes;
  GradcheckFn fn;
  /// Inputs whose magnitude is pushed to at least this value (kinks at zero).
  double min_abs = 0.0;
};

TensorD random_input(Rng& rng, const Shape& shape, double min_abs) {
  TensorD t = rng.uniform_tensor<double>(shape, -1.0, 1.0);
  if (min_abs > 0.0) {
    for (auto& v : t.values()) v = std::copysign(min_abs + (1.0 - min_abs) * std::abs(v), v);
  }
  return t;
}

// Complex projection built from four real grouped convolutions, as in the filter bank.
VarD complex_grouped(In in, int groups) {
  const std::int64_t c = in[0].dim(1), t = in[0].dim(2);
  const VarD xr = ops::reshape(ops::slice(in[0], 0, 0, 1), {c, t});
  const VarD xi = ops::reshape(ops::slice(in[0], 0, 1, 2), {c, t});
  const VarD none;
  const VarD re = ops::sub(ops::grouped_conv1d(xr, in[1], none, groups), ops::grouped_conv1d(xi, in[2], none, groups));
  const VarD im = ops::add(ops::grouped_conv1d(xi, in[1], none, groups), ops::grouped_conv1d(xr, in[2], none, groups));
  return ops::concat<double>({re, im}, 0);
}

std::vector<Case> cases() {
  std::vector<Case> c;
  c.push_back({"identity", {{3, 4}}, [](In in) { return ops::reshape(in[0], {3, 4}); }});
  c.push_back({"add", {{3, 4}, {3, 4}}, [](In in) { return ops::add(in[0], in[1]); }});
  c.push_back({"sub", {{3, 4}, {3, 4}}, [](In in) { return ops::sub(in[0], in[1]); }});
  c.push_back({"mul", {{3, 4}, {3, 4}}, [](In in) { return ops::mul(in[0], in[1]); }});
  c.push_back({"scale", {{3, 4}}, [](In in) { return ops::scale(in[0], -1.7); }});
  c.push_back({"square", {{3, 4}}, [](In in) { return ops::square(in[0]); }});
  c.push_back({"sigmoid", {{3, 4}}, [](In in) { return ops::sigmoid(in[0]); }});
  c.push_back({"tanh", {{3, 4}}, [](In in) { return ops::tanh(in[0]); }});
  c.push_back({"relu", {{3, 4}}, [](In in) { return ops::relu(in[0]); }, 0.1});
  c.push_back({"prelu", {{3, 2, 4}, {3}}, [](In in) { return ops::prelu(in[0], in[1]); }, 0.1});
  c.push_back({"sum", {{3, 4}}, [](In in) { return ops::sum(in[0]); }});
  c.push_back({"mean", {{3, 4}}, [](In in) { return ops::mean(in[0]); }});
  c.push_back({"permute", {{2, 3, 4}}, [](In in) { return ops::permute(in[0], {2, 0, 1}); }});
  c.push_back({"concat", {{2, 3}, {2, 2}}, [](In in) { return ops::concat<double>({in[0], in[1]}, 1); }});
  c.push_back({"slice", {{4, 5}}, [](In in) { return ops::slice(in[0], 1, 1, 4); }});
  c.push_back({"complex_mul", {{2, 3, 4}, {2, 3, 4}}, [](In in) { return ops::complex_mul(in[0], in[1]); }});
  c.push_back({"complex_abs", {{2, 3, 4}}, [](In in) { return ops::complex_abs(in[0], 1e-9); }, 0.2});
  c.push_back({"layer_norm_channels", {{4, 3, 2}, {4}, {4}},
               [](In in) { return ops::layer_norm(in[0], in[1], in[2], 0); }});
  c.push_back({"layer_norm_last", {{2, 3, 5}, {5}, {5}},
               [](In in) { return ops::layer_norm(in[0], in[1], in[2], -1); }});
  c.push_back({"linear", {{2, 3, 4}, {5, 4}, {5}}, [](In in) { return ops::linear(in[0], in[1], in[2]); }});
  c.push_back({"conv2d_causal", {{2, 8, 5}, {3, 2, 5, 2}, {3}}, [](In in) {
                 ops::Conv2dOptions o;
                 o.stride_f = 2;
                 o.pad_f = 2;
                 return ops::conv2d(in[0], in[1], in[2], o);
               }});
  c.push_back({"conv2d_dilated", {{2, 6, 7}, {2, 2, 3, 2}, {2}}, [](In in) {
                 ops::Conv2dOptions o;
                 o.pad_f = 1;
                 o.dilation_t = 2;
                 return ops::conv2d(in[0], in[1], in[2], o);
               }});
  c.push_back({"conv2d_valid_time", {{2, 4, 5}, {2, 2, 3, 3}, {2}}, [](In in) {
                 ops::Conv2dOptions o;
                 o.pad_f = 1;
                 o.causal = false;
                 return ops::conv2d(in[0], in[1], in[2], o);
               }});
  c.push_back({"conv_transpose2d", {{3, 4, 5}, {3, 2, 3, 2}, {2}}, [](In in) {
                 ops::ConvTranspose2dOptions o;
                 o.stride_f = 2;
                 o.pad_f = 1;
                 o.output_pad_f = 1;
                 return ops::conv_transpose2d(in[0], in[1], in[2], o);
               }});
  c.push_back({"grouped_conv1d", {{4, 6}, {6, 2, 2}, {6}},
               [](In in) { return ops::grouped_conv1d(in[0], in[1], in[2], 2); }});
  c.push_back({"complex_grouped_conv1d", {{2, 8, 5}, {2, 4, 1}, {2, 4, 1}}, [](In in) { return complex_grouped(in, 2); }});
  c.push_back({"lstm", {{2, 4, 3}, {12, 3}, {12, 3}, {12}},
               [](In in) { return ops::lstm(in[0], in[1], in[2], in[3], false).output; }});
  c.push_back({"lstm_reverse", {{2, 4, 3}, {12, 3}, {12, 3}, {12}},
               [](In in) { return ops::lstm(in[0], in[1], in[2], in[3], true).output; }});
  c.push_back({"gru", {{2, 4, 3}, {9, 3}, {9, 3}, {9}, {9}},
               [](In in) { return ops::gru(in[0], in[1], in[2], in[3], in[4], false).output; }});
  c.push_back({"gru_reverse", {{2, 4, 3}, {9, 3}, {9, 3}, {9}, {9}},
               [](In in) { return ops::gru(in[0], in[1], in[2], in[3], in[4], true).output; }});
  c.push_back({"attention", {{2, 4, 4}, {2, 4, 4}, {2, 4, 4}}, [](In in) {
                 ops::AttentionOptions o;
                 o.heads = 2;
                 return ops::attention(in[0], in[1], in[2], o);
               }});
  c.push_back({"attention_causal", {{2, 5, 4}, {2, 5, 4}, {2, 5, 4}}, [](In in) {
                 ops::AttentionOptions o;
                 o.heads = 2;
                 o.causal = true;
                 o.context = 3;
                 return ops::attention(in[0], in[1], in[2], o);
               }});
  c.push_back({"loss_ri", {{2, 4, 3}, {2, 4, 3}}, [](In in) { return loss_ri(in[0], in[1]); }});
  c.push_back({"loss_mag", {{2, 4, 3}, {2, 4, 3}}, [](In in) { return loss_mag(in[0], in[1]); }, 0.2});
  c.push_back({"loss_stage", {{2, 4, 3}, {2, 4, 3}}, [](In in) { return loss_stage(in[0], in[1], 0.5); }, 0.2});
  c.push_back({"loss_total", {{2, 4, 3}, {2, 4, 3}, {2, 4, 3}},
               [](In in) { return loss_total(in[0], in[1], in[2], LossConfig{}).total; }, 0.2});
  return c;
}

}  // namespace

std::vector<GradcheckReport> run_gradcheck_suite(std::uint64_t seed, const std::string& corrupt, double tolerance) {
  std::vector<GradcheckReport> out;
  auto all = cases();
  bool found = corrupt.empty();
  for (std::size_t k = 0; k < all.size(); ++k) {
    auto& c = all[k];
    Rng rng(derive_seed(seed, k));
    std::vector<TensorD> inputs;
    for (const auto& s : c.shapes) inputs.push_back(random_input(rng, s, c.min_abs));
    GradcheckFn fn = c.fn;
    if (c.name == corrupt) {
      found = true;
      fn = [inner = c.fn](In in) { return flip_grad_sign(inner(in)); };
    }
    GradcheckOptions opt;
    opt.tolerance = tolerance;
    opt.seed = derive_seed(seed, 1000 + k);
    out.push_back(gradcheck(c.name, fn, inputs, opt));
  }
  if (!found) throw ConfigError("gradcheck: unknown case '" + corrupt + "'");
  return out;
}

}  // namespace thl
