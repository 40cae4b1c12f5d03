#pragma once

#include <mutex>

#include "tilebench/nn/module.hpp"
#include "tilebench/nn/ops.hpp"

namespace tilebench::nn {

enum class Act { None, ReLU, ReLU6, SiLU, GELU, Sigmoid };

template <typename T>
Tensor<T> activate(const Tensor<T>& x, Act act);

// (B, C, H, W) <-> (B, H*W, C)
template <typename T>
Tensor<T> to_tokens(const Tensor<T>& x);
template <typename T>
Tensor<T> to_map(const Tensor<T>& tokens, std::int64_t h, std::int64_t w);

template <typename T>
class Linear : public Module<T> {
 public:
  Linear(int in, int out, bool bias, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const { return ops::linear(x, weight, bias); }

  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
class Conv2d : public Module<T> {
 public:
  Conv2d(int in, int out, int kernel, int stride, int padding, int groups, bool bias, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const { return ops::conv2d(x, weight, bias, options); }

  Tensor<T> weight;
  Tensor<T> bias;
  ops::Conv2dOptions options;
};

template <typename T>
class BatchNorm2d : public Module<T> {
 public:
  explicit BatchNorm2d(int channels);
  Tensor<T> forward(const Tensor<T>& x);

  Tensor<T> weight;
  Tensor<T> bias;
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

template <typename T>
class LayerNorm : public Module<T> {
 public:
  explicit LayerNorm(int dim);
  Tensor<T> forward(const Tensor<T>& x) const { return ops::layer_norm(x, weight, bias); }

  Tensor<T> weight;
  Tensor<T> bias;
};

// conv -> BN -> act, or conv -> act -> BN when act_before_norm.
template <typename T>
class ConvNormAct : public Module<T> {
 public:
  struct Options {
    int kernel = 1;
    int stride = 1;
    int groups = 1;
    bool conv_bias = false;
    Act act = Act::ReLU;
    bool act_before_norm = false;
  };
  ConvNormAct(int in, int out, Options opt, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);

 private:
  std::shared_ptr<Conv2d<T>> conv_;
  std::shared_ptr<BatchNorm2d<T>> bn_;
  Options opt_;
};

template <typename T>
class Mlp : public Module<T> {
 public:
  Mlp(int dim, int hidden, Act act, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const;

 private:
  std::shared_ptr<Linear<T>> fc1_;
  std::shared_ptr<Linear<T>> fc2_;
  Act act_;
};

// q (B, Nq, C), k and v (B, Nk, C) -> (B, Nq, C), heads split along C.
// bias (optional) is added to the (B, heads, Nq, Nk) scores by broadcasting;
// with groups > 1 the scores are viewed as (B / groups, groups, heads, Nq, Nk)
// first so a per-group bias of shape (groups, heads, Nq, Nk) lines up.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads,
                               const Tensor<T>& bias = {}, int groups = 1, Shape* score_shape = nullptr);

template <typename T>
class SelfAttention : public Module<T> {
 public:
  SelfAttention(int dim, int heads, bool qkv_bias, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& bias = {}, int groups = 1);

  int heads() const { return heads_; }
  // Shape of the score tensor from the last forward call.
  Shape last_score_shape() const {
    std::lock_guard lock(mutex_);
    return last_scores_;
  }

 private:
  std::shared_ptr<Linear<T>> qkv_;
  std::shared_ptr<Linear<T>> proj_;
  int heads_;
  // forward may run concurrently on a shared model during prediction
  mutable std::mutex mutex_;
  Shape last_scores_;
};

// One LSTM direction (weight_ih, weight_hh, bias_ih, bias_hh).
template <typename T>
class Lstm : public Module<T> {
 public:
  Lstm(int in, int hidden, Rng& rng);
  // x (S, L, in) -> (S, L, hidden)
  Tensor<T> forward(const Tensor<T>& x, bool reverse) const {
    return ops::lstm(x, weight_ih, weight_hh, bias_ih, bias_hh, reverse);
  }

  Tensor<T> weight_ih;
  Tensor<T> weight_hh;
  Tensor<T> bias_ih;
  Tensor<T> bias_hh;
};

}  // namespace tilebench::nn
