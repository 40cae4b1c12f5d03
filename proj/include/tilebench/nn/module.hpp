#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tilebench/core/rng.hpp"
#include "tilebench/nn/tensor.hpp"

namespace tilebench::nn {

// Truncated normal (cut at two standard deviations), default std 0.02.
template <typename T>
Tensor<T> trunc_normal(Shape shape, Rng& rng, double std = 0.02);

// Parameter/buffer registry with named children. Parameters are enumerated in
// declaration order, depth first; checkpoints rely on that order.
template <typename T>
class Module {
 public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  virtual ~Module() = default;

  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const;
  std::vector<Tensor<T>> parameters() const;
  std::vector<std::pair<std::string, Tensor<T>>> named_buffers() const;
  // Parameters then buffers; this is what a checkpoint stores.
  std::vector<std::pair<std::string, Tensor<T>>> state() const;
  std::int64_t parameter_count() const;

  void set_training(bool on);
  bool training() const { return training_; }

 protected:
  Tensor<T> add_parameter(std::string name, Tensor<T> t);
  Tensor<T> add_buffer(std::string name, Tensor<T> t);
  template <typename M>
  std::shared_ptr<M> add_module(std::string name, std::shared_ptr<M> m) {
    children_.emplace_back(std::move(name), m);
    return m;
  }

 private:
  void collect(const std::string& prefix, bool buffers, std::vector<std::pair<std::string, Tensor<T>>>& out) const;

  std::vector<std::pair<std::string, Tensor<T>>> params_;
  std::vector<std::pair<std::string, Tensor<T>>> buffers_;
  std::vector<std::pair<std::string, std::shared_ptr<Module>>> children_;
  bool training_ = true;
};

}  // namespace tilebench::nn
