#include "thlnet/autograd.hpp"

#include <cmath>
#include <unordered_set>

namespace thl {

namespace {
thread_local bool g_grad_enabled = true;
// Op whose backward is running, for naming the source of a non-finite gradient.
thread_local const std::string* g_backward_op = nullptr;
}  // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Var<T>::Var(Tensor<T> value, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

template <typename T>
void Var<T>::zero_grad() {
  if (node_ && node_->has_grad()) node_->grad.fill(T(0));
}

template <typename T>
Var<T> make_result(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> backward) {
  if (!value.all_finite()) {
    throw NumericError(op, "op '" + op + "' produced a non-finite value (output shape " + shape_str(value.shape()) +
                               ")");
  }
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = std::move(op);
  bool any = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) any = any || in.requires_grad();
  }
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& in : inputs) node->parents.push_back(in.node());
    node->backward_fn = std::move(backward);
  }
  return Var<T>(std::move(node));
}

template <typename T>
void accumulate_grad(Node<T>& node, const Tensor<T>& g) {
  if (!node.requires_grad) return;
  if (g.numel() != node.value.numel()) {
    throw GraphError("gradient of size " + std::to_string(g.numel()) + " accumulated into node '" + node.op +
                     "' of shape " + shape_str(node.value.shape()));
  }
  auto& buf = node.grad_buffer();
  T* dst = buf.data();
  const T* src = g.data();
  bool finite = true;
  for (std::size_t i = 0; i < g.numel(); ++i) {
    dst[i] += src[i];
    finite &= std::isfinite(src[i]);
  }
  if (!finite) {
    const std::string op = g_backward_op ? *g_backward_op : std::string("leaf");
    throw NumericError(op, "backward of op '" + op + "' produced a non-finite gradient for input '" + node.op + "'");
  }
}

namespace {

template <typename T>
std::vector<Node<T>*> topo_order(Node<T>* root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  // Iterative post-order DFS; graphs from long recurrences can be deep.
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents before children
}

}  // namespace

template <typename T>
void backward(const Var<T>& loss) {
  if (!loss.defined()) throw GraphError("backward on undefined variable");
  if (loss.numel() != 1) {
    throw GraphError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  Node<T>* root = loss.get();
  if (root->backward_done) throw GraphError("backward called twice on the same graph without reset_graph()");
  if (!root->requires_grad) throw GraphError("loss does not depend on any tensor that requires grad");
  root->backward_done = true;

  auto order = topo_order(root);
  root->grad_buffer().fill(T(0));
  root->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->backward_fn) continue;
    if (!n->has_grad()) continue;  // no path from the loss reached this node
    g_backward_op = &n->op;
    try {
      n->backward_fn(*n);
    } catch (...) {
      g_backward_op = nullptr;
      throw;
    }
  }
  g_backward_op = nullptr;
}

template <typename T>
void reset_graph(const Var<T>& loss) {
  if (!loss.defined()) return;
  Node<T>* root = loss.get();
  root->backward_done = false;
  if (!root->requires_grad) return;
  for (Node<T>* n : topo_order(root)) {
    if (n->backward_fn) n->grad = Tensor<T>();
  }
}

template class Var<float>;
template class Var<double>;

template Var<float> make_result(std::string, Tensor<float>, std::vector<Var<float>>,
                                std::function<void(Node<float>&)>);
template Var<double> make_result(std::string, Tensor<double>, std::vector<Var<double>>,
                                 std::function<void(Node<double>&)>);
template void accumulate_grad(Node<float>&, const Tensor<float>&);
template void accumulate_grad(Node<double>&, const Tensor<double>&);
template void backward(const Var<float>&);
template void backward(const Var<double>&);
template void reset_graph(const Var<float>&);
template void reset_graph(const Var<double>&);

}  // namespace thl
