#include "thlnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "thlnet/ops.hpp"
#include "thlnet/random.hpp"

namespace thl {

namespace {

double projected(const VarD& out, const TensorD& r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < r.numel(); ++i) acc += out.value()[i] * r[i];
  return acc;
}

}  // namespace

GradcheckReport gradcheck(const std::string& name, const GradcheckFn& fn, const std::vector<TensorD>& inputs,
                          const GradcheckOptions& options) {
  GradcheckReport report;
  report.name = name;
  report.tolerance = options.tolerance;

  std::vector<VarD> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.emplace_back(t, true);
  VarD out = fn(leaves);
  if (!out.defined() || !out.requires_grad() || !out.get()->backward_fn) {
    throw GraphError("gradcheck '" + name + "': output op '" + (out.defined() ? out.op() : std::string("?")) +
                     "' has no backward registered");
  }
  Rng rng(options.seed);
  TensorD r = rng.uniform_tensor<double>(out.shape(), -1.0, 1.0);
  VarD loss = ops::sum(ops::mul(out, VarD(r)));
  backward(loss);

  NoGradGuard no_grad;
  std::vector<VarD> probe;
  probe.reserve(inputs.size());
  for (const auto& t : inputs) probe.emplace_back(t, false);
  double worst = 0.0;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    const TensorD analytic = leaves[a].has_grad() ? leaves[a].grad() : TensorD(inputs[a].shape());
    TensorD& x = probe[a].mutable_value();
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double orig = x[i];
      x[i] = orig + options.step;
      const double fp = projected(fn(probe), r);
      x[i] = orig - options.step;
      const double fm = projected(fn(probe), r);
      x[i] = orig;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), options.floor});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
      ++report.elements_checked;
    }
  }
  report.max_rel_error = worst;
  report.pass = worst < options.tolerance;
  return report;
}

VarD flip_grad_sign(const VarD& x) {
  return make_result<double>("flip_grad_sign", x.value(), {x}, [](Node<double>& self) {
    TensorD g(self.grad.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = -self.grad[i];
    accumulate_grad(*self.parents[0], g);
  });
}

}  // namespace thl
