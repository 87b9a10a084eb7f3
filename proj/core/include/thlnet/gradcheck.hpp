#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "thlnet/autograd.hpp"

namespace thl {

struct GradcheckReport {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t elements_checked = 0;
  bool pass = false;
};

using GradcheckFn = std::function<VarD(const std::vector<VarD>&)>;

struct GradcheckOptions {
  double tolerance = 1e-5;
  double step = 1e-4;
  /// Denominator floor of the relative error, so near-zero gradients compare absolutely.
  double floor = 1e-3;
  std::uint64_t seed = 0;
};

/// Compares reverse-mode gradients of sum(fn(inputs) * r), r a fixed random projection,
/// against central finite differences, for every element of every input.
/// Throws GraphError if fn's output has no registered backward.
GradcheckReport gradcheck(const std::string& name, const GradcheckFn& fn, const std::vector<TensorD>& inputs,
                          const GradcheckOptions& options = {});

/// Identity forward with a negated backward. Used as a negative control for gradcheck.
VarD flip_grad_sign(const VarD& x);

/// Runs gradcheck over every differentiable primitive and both stage losses.
/// `corrupt` names a case whose output is routed through flip_grad_sign.
std::vector<GradcheckReport> run_gradcheck_suite(std::uint64_t seed, const std::string& corrupt = "",
                                                 double tolerance = 1e-5);

}  // namespace thl
