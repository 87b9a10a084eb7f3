#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "thlnet/tensor.hpp"

namespace thl {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool backward_done = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  /// Reads `self.grad` and accumulates into parents. Empty for leaves.
  std::function<void(Node& self)> backward_fn;

  Tensor<T>& grad_buffer() {
    if (grad.numel() != value.numel() || grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
  bool has_grad() const { return grad.numel() == value.numel() && !grad.shape().empty(); }
};

/// Handle to a graph node. Cheap to copy; copies alias the same node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(int axis) const { return node_->value.dim(axis); }
  std::size_t numel() const { return node_->value.numel(); }

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_->has_grad(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();
  const std::string& op() const { return node_->op; }

  std::shared_ptr<Node<T>> node() const { return node_; }
  Node<T>* get() const { return node_.get(); }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Whether ops record backward closures on this thread.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op node. `backward` is stored only if grad mode is on and any input requires grad.
/// Throws NumericError if `value` contains NaN/Inf.
template <typename T>
Var<T> make_result(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> backward);

/// Adds `g` into the grad buffer of `v` if it tracks gradients.
template <typename T>
void accumulate_grad(Node<T>& node, const Tensor<T>& g);

/// Reverse-mode sweep from a scalar loss. Each node in the graph is visited once.
/// A second call on the same loss without reset_graph() throws GraphError.
template <typename T>
void backward(const Var<T>& loss);

/// Clears the backward marker on `loss` and the grads of every non-leaf node reachable from it.
template <typename T>
void reset_graph(const Var<T>& loss);

extern template class Var<float>;
extern template class Var<double>;

using VarF = Var<float>;
using VarD = Var<double>;

}  // namespace thl
