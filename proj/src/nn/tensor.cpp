#include "tilebench/nn/tensor.hpp"

#include <unordered_set>

#include "tilebench/core/errors.hpp"

namespace tilebench::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + ")";
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value.assign(static_cast<std::size_t>(numel(shape)), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (static_cast<std::int64_t>(values.size()) != numel(shape)) {
    throw ShapeMismatch(std::to_string(values.size()) + " values for shape " + shape_string(shape));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw ShapeMismatch("axis out of range for shape " + shape_string(shape()));
  return node_->shape[static_cast<std::size_t>(axis)];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeMismatch("item() on shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), values(), false);
}

template <typename T>
void Tensor<T>::backward() {
  if (size() != 1) throw ShapeMismatch("backward() needs a single-element tensor");
  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<T>* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      continue;
    }
    order.push_back(n);
    stack.pop_back();
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& in : inputs) any = any || (in.defined() && in.requires_grad());
    if (any) {
      node->requires_grad = true;
      for (auto& in : inputs) {
        if (in.defined()) node->parents.push_back(in.node_ptr());
      }
      node->backward_fn = std::move(backward);
    }
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, std::vector<float>, std::vector<Tensor<float>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>, std::vector<Tensor<double>>,
                                    std::function<void(Node<double>&)>);

}  // namespace tilebench::nn
