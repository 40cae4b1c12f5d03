#pragma once

#include <vector>

#include "tilebench/nn/tensor.hpp"

// Differentiable primitives. Layouts: images are NCHW, token sequences are
// (batch, tokens, channels). Every op throws ShapeMismatch on incompatible
// operands.
namespace tilebench::nn::ops {

// Elementwise with NumPy-style broadcasting.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> relu6(const Tensor<T>& x);
template <typename T> Tensor<T> gelu(const Tensor<T>& x);  // erf form
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
template <typename T> Tensor<T> silu(const Tensor<T>& x);

// a: (..., M, K). b: (K, N) shared across the batch, or (..., K, N) with the
// same leading dims as a. transpose_b reads b as (..., N, K).
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);
// x (..., in) * w(out, in)^T + bias(out); bias may be undefined.
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias);

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};
// x (N, C, H, W), w (O, C / groups, kh, kw), bias (O) or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, Conv2dOptions opt = {});

// Normalizes over every axis except 1. In training mode uses batch statistics
// and updates the running buffers in place (unbiased variance).
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T>& running_mean,
                     Tensor<T>& running_var, bool training, T momentum = T(0.1), T eps = T(1e-5));
// Normalizes over the last axis.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5));
// Over the last axis.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

template <typename T> Tensor<T> max_pool2d(const Tensor<T>& x, int kernel, int stride, int padding);
template <typename T> Tensor<T> avg_pool2d(const Tensor<T>& x, int kernel, int stride);
// (N, C, H, W) -> (N, C)
template <typename T> Tensor<T> global_avg_pool(const Tensor<T>& x);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
// Mean over one axis, which is removed.
template <typename T> Tensor<T> mean_dim(const Tensor<T>& x, int axis);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& axes);
template <typename T> Tensor<T> slice(const Tensor<T>& x, int axis, std::int64_t start, std::int64_t length);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);
// out[i] = x[index[i]]; the backward pass scatter-adds, so repeated indices
// (broadcast copies) are fine.
template <typename T>
Tensor<T> gather(const Tensor<T>& x, Shape out_shape, std::vector<std::int64_t> index);

// Single-direction LSTM over x (S, L, in): S independent sequences of L steps,
// zero initial state. Weights follow the (i, f, g, o) gate layout with separate
// input and recurrent biases. reverse runs from step L-1 down to 0. -> (S, L, hidden)
template <typename T>
Tensor<T> lstm(const Tensor<T>& x, const Tensor<T>& w_ih, const Tensor<T>& w_hh, const Tensor<T>& b_ih,
               const Tensor<T>& b_hh, bool reverse);

// mean_b w[y_b] * -log softmax(logits_b)[y_b]; logits (B, C).
template <typename T>
Tensor<T> weighted_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                                 const std::vector<T>& weights);

}  // namespace tilebench::nn::ops

namespace tilebench::nn {

template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return ops::add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return ops::sub(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return ops::mul(a, b); }

}  // namespace tilebench::nn
