#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tilebench::nn {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Shared handle to a dense row-major array that can take part in reverse-mode
// differentiation. Copies alias the same storage.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value) { return from({}, {value}); }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t size() const { return node_->value.size(); }

  std::span<T> data() { return node_->value; }
  std::span<const T> data() const { return node_->value; }
  std::vector<T>& values() { return node_->value; }
  const std::vector<T>& values() const { return node_->value; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad() { node_->grad.clear(); }

  // Seeds d(self)/d(self) = 1; self must hold exactly one element.
  void backward();

  // Same values, no history.
  Tensor detach() const;
  T item() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Graph recording switch (thread-local). Inference runs under NoGradGuard so
// intermediate values are released as soon as they go out of scope.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. When recording is on and any input requires a
// gradient, the node keeps its inputs and `backward` for the reverse pass.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward);

}  // namespace tilebench::nn
