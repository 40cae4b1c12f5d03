#include "tilebench/nn/module.hpp"

#include <cmath>

namespace tilebench::nn {

template <typename T>
Tensor<T> trunc_normal(Shape shape, Rng& rng, double std) {
  std::vector<T> values(static_cast<std::size_t>(numel(shape)));
  for (auto& v : values) {
    double z;
    do {
      z = standard_normal(rng);
    } while (std::abs(z) > 2.0);
    v = static_cast<T>(z * std);
  }
  return Tensor<T>::from(std::move(shape), std::move(values));
}

template <typename T>
void Module<T>::collect(const std::string& prefix, bool buffers,
                        std::vector<std::pair<std::string, Tensor<T>>>& out) const {
  for (const auto& [name, t] : buffers ? buffers_ : params_) out.emplace_back(prefix + name, t);
  for (const auto& [name, child] : children_) child->collect(prefix + name + ".", buffers, out);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Module<T>::named_parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  collect("", false, out);
  return out;
}

template <typename T>
std::vector<Tensor<T>> Module<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Module<T>::named_buffers() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  collect("", true, out);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Module<T>::state() const {
  auto out = named_parameters();
  for (auto& b : named_buffers()) out.push_back(std::move(b));
  return out;
}

template <typename T>
std::int64_t Module<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += static_cast<std::int64_t>(t.size());
  return n;
}

template <typename T>
void Module<T>::set_training(bool on) {
  training_ = on;
  for (auto& [name, child] : children_) child->set_training(on);
}

template <typename T>
Tensor<T> Module<T>::add_parameter(std::string name, Tensor<T> t) {
  t.set_requires_grad(true);
  params_.emplace_back(std::move(name), t);
  return t;
}

template <typename T>
Tensor<T> Module<T>::add_buffer(std::string name, Tensor<T> t) {
  t.set_requires_grad(false);
  buffers_.emplace_back(std::move(name), t);
  return t;
}

template Tensor<float> trunc_normal(Shape, Rng&, double);
template Tensor<double> trunc_normal(Shape, Rng&, double);
template class Module<float>;
template class Module<double>;

}  // namespace tilebench::nn
