#include "tilebench/nn/layers.hpp"

#include <mutex>

#include <cmath>

#include "tilebench/core/errors.hpp"

namespace tilebench::nn {

template <typename T>
Tensor<T> activate(const Tensor<T>& x, Act act) {
  switch (act) {
    case Act::None: return x;
    case Act::ReLU: return ops::relu(x);
    case Act::ReLU6: return ops::relu6(x);
    case Act::SiLU: return ops::silu(x);
    case Act::GELU: return ops::gelu(x);
    case Act::Sigmoid: return ops::sigmoid(x);
  }
  return x;
}

template <typename T>
Tensor<T> to_tokens(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeMismatch("to_tokens expects (B, C, H, W), got " + shape_string(x.shape()));
  return ops::permute(ops::reshape(x, {x.dim(0), x.dim(1), x.dim(2) * x.dim(3)}), {0, 2, 1});
}

template <typename T>
Tensor<T> to_map(const Tensor<T>& tokens, std::int64_t h, std::int64_t w) {
  if (tokens.rank() != 3 || tokens.dim(1) != h * w) {
    throw ShapeMismatch("to_map: " + shape_string(tokens.shape()) + " is not " + std::to_string(h) + "x" +
                        std::to_string(w) + " tokens");
  }
  return ops::reshape(ops::permute(tokens, {0, 2, 1}), {tokens.dim(0), tokens.dim(2), h, w});
}

template <typename T>
Linear<T>::Linear(int in, int out, bool with_bias, Rng& rng) {
  weight = this->add_parameter("weight", trunc_normal<T>({out, in}, rng));
  if (with_bias) bias = this->add_parameter("bias", Tensor<T>::zeros({out}));
}

template <typename T>
Conv2d<T>::Conv2d(int in, int out, int kernel, int stride, int padding, int groups, bool with_bias, Rng& rng) {
  if (in % groups != 0 || out % groups != 0) {
    throw ShapeMismatch("conv groups " + std::to_string(groups) + " do not divide " + std::to_string(in) + "->" +
                        std::to_string(out));
  }
  weight = this->add_parameter("weight", trunc_normal<T>({out, in / groups, kernel, kernel}, rng));
  if (with_bias) bias = this->add_parameter("bias", Tensor<T>::zeros({out}));
  options = {stride, padding, groups};
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels) {
  weight = this->add_parameter("weight", Tensor<T>::full({channels}, T(1)));
  bias = this->add_parameter("bias", Tensor<T>::zeros({channels}));
  running_mean = this->add_buffer("running_mean", Tensor<T>::zeros({channels}));
  running_var = this->add_buffer("running_var", Tensor<T>::full({channels}, T(1)));
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x) {
  return ops::batch_norm(x, weight, bias, running_mean, running_var, this->training());
}

template <typename T>
LayerNorm<T>::LayerNorm(int dim) {
  weight = this->add_parameter("weight", Tensor<T>::full({dim}, T(1)));
  bias = this->add_parameter("bias", Tensor<T>::zeros({dim}));
}

template <typename T>
ConvNormAct<T>::ConvNormAct(int in, int out, Options opt, Rng& rng) : opt_(opt) {
  conv_ = this->add_module(
      "conv", std::make_shared<Conv2d<T>>(in, out, opt.kernel, opt.stride, opt.kernel / 2, opt.groups, opt.conv_bias, rng));
  bn_ = this->add_module("bn", std::make_shared<BatchNorm2d<T>>(out));
}

template <typename T>
Tensor<T> ConvNormAct<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = conv_->forward(x);
  if (opt_.act_before_norm) return bn_->forward(activate(y, opt_.act));
  return activate(bn_->forward(y), opt_.act);
}

template <typename T>
Mlp<T>::Mlp(int dim, int hidden, Act act, Rng& rng) : act_(act) {
  fc1_ = this->add_module("fc1", std::make_shared<Linear<T>>(dim, hidden, true, rng));
  fc2_ = this->add_module("fc2", std::make_shared<Linear<T>>(hidden, dim, true, rng));
}

template <typename T>
Tensor<T> Mlp<T>::forward(const Tensor<T>& x) const {
  return fc2_->forward(activate(fc1_->forward(x), act_));
}

namespace {

// (B, N, C) -> (B, heads, N, C / heads)
template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, int heads) {
  const auto b = x.dim(0), n = x.dim(1), c = x.dim(2);
  if (c % heads != 0) throw ShapeMismatch(std::to_string(c) + " channels over " + std::to_string(heads) + " heads");
  return ops::permute(ops::reshape(x, {b, n, heads, c / heads}), {0, 2, 1, 3});
}

}  // namespace

template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads,
                               const Tensor<T>& bias, int groups, Shape* score_shape) {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3 || q.dim(0) != k.dim(0) || k.shape() != v.shape() ||
      q.dim(2) != k.dim(2)) {
    throw ShapeMismatch("attention q " + shape_string(q.shape()) + " k " + shape_string(k.shape()) + " v " +
                        shape_string(v.shape()));
  }
  const auto b = q.dim(0), nq = q.dim(1), c = q.dim(2);
  const T scale = T(1) / std::sqrt(static_cast<T>(c / heads));
  Tensor<T> scores = ops::scale(ops::matmul(split_heads(q, heads), split_heads(k, heads), true), scale);
  if (score_shape) *score_shape = scores.shape();
  if (bias.defined()) {
    if (groups > 1) {
      Shape grouped = scores.shape();
      grouped[0] = b / groups;
      grouped.insert(grouped.begin() + 1, groups);
      scores = ops::reshape(ops::add(ops::reshape(scores, grouped), bias), scores.shape());
    } else {
      scores = ops::add(scores, bias);
    }
  }
  Tensor<T> out = ops::matmul(ops::softmax(scores), split_heads(v, heads));
  return ops::reshape(ops::permute(out, {0, 2, 1, 3}), {b, nq, c});
}

template <typename T>
SelfAttention<T>::SelfAttention(int dim, int heads, bool qkv_bias, Rng& rng) : heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    throw ShapeMismatch("attention dim " + std::to_string(dim) + " not divisible by " + std::to_string(heads) +
                        " heads");
  }
  qkv_ = this->add_module("qkv", std::make_shared<Linear<T>>(dim, 3 * dim, qkv_bias, rng));
  proj_ = this->add_module("proj", std::make_shared<Linear<T>>(dim, dim, true, rng));
}

template <typename T>
Tensor<T> SelfAttention<T>::forward(const Tensor<T>& x, const Tensor<T>& bias, int groups) {
  const auto c = x.dim(-1);
  Tensor<T> qkv = qkv_->forward(x);
  Tensor<T> q = ops::slice(qkv, 2, 0, c);
  Tensor<T> k = ops::slice(qkv, 2, c, c);
  Tensor<T> v = ops::slice(qkv, 2, 2 * c, c);
  Shape score_shape;
  auto out = multi_head_attention(q, k, v, heads_, bias, groups, &score_shape);
  {
    std::lock_guard lock(mutex_);
    last_scores_ = std::move(score_shape);
  }
  return proj_->forward(out);
}

template <typename T>
Lstm<T>::Lstm(int in, int hidden, Rng& rng) {
  weight_ih = this->add_parameter("weight_ih", trunc_normal<T>({4 * hidden, in}, rng));
  weight_hh = this->add_parameter("weight_hh", trunc_normal<T>({4 * hidden, hidden}, rng));
  bias_ih = this->add_parameter("bias_ih", Tensor<T>::zeros({4 * hidden}));
  bias_hh = this->add_parameter("bias_hh", Tensor<T>::zeros({4 * hidden}));
}

#define TILEBENCH_INSTANTIATE_LAYERS(T)                                                                    \
  template Tensor<T> activate(const Tensor<T>&, Act);                                                      \
  template Tensor<T> to_tokens(const Tensor<T>&);                                                          \
  template Tensor<T> to_map(const Tensor<T>&, std::int64_t, std::int64_t);                                 \
  template Tensor<T> multi_head_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int,       \
                                          const Tensor<T>&, int, Shape*);                                  \
  template class Linear<T>;                                                                                \
  template class Conv2d<T>;                                                                                \
  template class BatchNorm2d<T>;                                                                           \
  template class LayerNorm<T>;                                                                             \
  template class ConvNormAct<T>;                                                                           \
  template class Mlp<T>;                                                                                   \
  template class SelfAttention<T>;                                                                         \
  template class Lstm<T>;

TILEBENCH_INSTANTIATE_LAYERS(float)
TILEBENCH_INSTANTIATE_LAYERS(double)

}  // namespace tilebench::nn
