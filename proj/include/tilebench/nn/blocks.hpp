#pragma once

#include "tilebench/nn/layers.hpp"

// Family-specific building blocks. Feature maps are NCHW unless a signature
// says otherwise; token grids are (B, H*W, C) with the grid size passed along.
namespace tilebench::nn {

// Basic (two 3x3) or bottleneck (1x1, 3x3, 1x1 with 4x expansion) unit with an
// identity or 1x1-conv+BN shortcut: relu(F(x) + shortcut(x)).
template <typename T>
class ResidualBlock : public Module<T> {
 public:
  ResidualBlock(int in, int width, int stride, bool bottleneck, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  int out_channels() const { return out_; }

 private:
  std::vector<std::shared_ptr<Conv2d<T>>> convs_;
  std::vector<std::shared_ptr<BatchNorm2d<T>>> norms_;
  std::shared_ptr<Conv2d<T>> shortcut_conv_;
  std::shared_ptr<BatchNorm2d<T>> shortcut_bn_;
  int out_;
};

template <typename T>
class SqueezeExcite : public Module<T> {
 public:
  SqueezeExcite(int channels, int squeeze, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  // Replaces the sigmoid gate by the constant 1.
  bool unit_gate = false;

 private:
  std::shared_ptr<Conv2d<T>> reduce_;
  std::shared_ptr<Conv2d<T>> expand_;
};

// Expand (1x1, skipped when expand_ratio is 1) -> depthwise kxk -> optional
// squeeze-excite -> linear 1x1 projection; identity residual when stride is 1
// and widths match. With a squeeze-excite stage this is the MBConv block.
template <typename T>
class InvertedResidual : public Module<T> {
 public:
  struct Options {
    int expand_ratio = 6;
    int kernel = 3;
    int stride = 1;
    Act act = Act::ReLU6;
    int se_squeeze = 0;  // 0: no squeeze-excite
  };
  InvertedResidual(int in, int out, Options opt, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  bool has_residual() const { return residual_; }
  SqueezeExcite<T>* se() const { return se_.get(); }

 private:
  std::shared_ptr<ConvNormAct<T>> expand_;
  std::shared_ptr<ConvNormAct<T>> depthwise_;
  std::shared_ptr<SqueezeExcite<T>> se_;
  std::shared_ptr<Conv2d<T>> project_;
  std::shared_ptr<BatchNorm2d<T>> project_bn_;
  bool residual_;
};

// Pre-norm encoder layer: x + attn(LN(x)), then x + mlp(LN(x)). (B, N, C).
template <typename T>
class TransformerBlock : public Module<T> {
 public:
  TransformerBlock(int dim, int heads, int mlp_hidden, Act act, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  SelfAttention<T>& attention() { return *attn_; }

 private:
  std::shared_ptr<LayerNorm<T>> norm1_;
  std::shared_ptr<SelfAttention<T>> attn_;
  std::shared_ptr<LayerNorm<T>> norm2_;
  std::shared_ptr<Mlp<T>> mlp_;
};

// Window helpers on channels-last maps (B, H, W, C).
// (B, H, W, C) -> (B * nW, window^2, C), windows in row-major order.
template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int window);
// Inverse of window_partition.
template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, int window, std::int64_t batch, std::int64_t h, std::int64_t w);
// out[i, j] = x[(i + shift) mod H, (j + shift) mod W]; a negative shift undoes it.
template <typename T>
Tensor<T> cyclic_shift(const Tensor<T>& x, int shift);
// (nW, N, N) additive mask: 0 within a region, -100 across regions created by
// the cyclic shift.
template <typename T>
Tensor<T> shifted_window_mask(std::int64_t h, std::int64_t w, int window, int shift);
// Flattened (window^2 x window^2) lookup into the (2w-1)^2 bias table.
std::vector<std::int64_t> relative_position_index(int window);

// Windowed self-attention with a learned relative-position bias; shift > 0
// selects the shifted-window variant. Operates on (B, H*W, C).
template <typename T>
class SwinBlock : public Module<T> {
 public:
  SwinBlock(int dim, int heads, int window, int shift, int mlp_hidden, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, std::int64_t h, std::int64_t w);
  // Attention-score entries per query token in the last forward call.
  std::int64_t score_entries_per_token() const;

 private:
  std::shared_ptr<LayerNorm<T>> norm1_;
  std::shared_ptr<SelfAttention<T>> attn_;
  std::shared_ptr<LayerNorm<T>> norm2_;
  std::shared_ptr<Mlp<T>> mlp_;
  Tensor<T> bias_table_;
  std::vector<std::int64_t> bias_index_;
  int heads_, window_, shift_;
};

// 2x2 neighbourhood concat -> LN(4C) -> linear 4C -> out. (B, H*W, C) -> (B, H*W/4, out).
template <typename T>
class PatchMerging : public Module<T> {
 public:
  PatchMerging(int dim, int out, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, std::int64_t h, std::int64_t w);

 private:
  std::shared_ptr<LayerNorm<T>> norm_;
  std::shared_ptr<Linear<T>> reduction_;
};

// (B, C, H, W) -> (B * p^2, H*W/p^2, C): one sequence per within-patch pixel
// position, patches in row-major order.
template <typename T>
Tensor<T> unfold_patches(const Tensor<T>& x, int patch);
template <typename T>
Tensor<T> fold_patches(const Tensor<T>& seq, int patch, std::int64_t batch, std::int64_t h, std::int64_t w);

// Local 3x3 conv, 1x1 to the transformer width, unfold, transformer layers,
// fold, 1x1 back, then 3x3 fusion of the concatenated input and result.
template <typename T>
class MobileViTBlock : public Module<T> {
 public:
  MobileViTBlock(int channels, int dim, int depth, int heads, int mlp_hidden, int patch, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);

 private:
  std::shared_ptr<ConvNormAct<T>> local_;
  std::shared_ptr<Conv2d<T>> to_dim_;
  std::vector<std::shared_ptr<TransformerBlock<T>>> layers_;
  std::shared_ptr<LayerNorm<T>> norm_;
  std::shared_ptr<ConvNormAct<T>> from_dim_;
  std::shared_ptr<ConvNormAct<T>> fusion_;
  int patch_;
};

// Three stacked 3x3 convs (stride 2, 1, 1), each conv -> GELU -> BN.
template <typename T>
class CmtStem : public Module<T> {
 public:
  CmtStem(int in, int width, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);

 private:
  std::vector<std::shared_ptr<ConvNormAct<T>>> convs_;
};

// CMT block on a map: local perception unit (x + dw3x3(x)), lightweight
// attention with keys/values spatially reduced by a stride-sr depthwise conv,
// and an inverted-residual feed-forward. rel_pos is (heads, N, N / sr^2) and
// is owned by the stage.
template <typename T>
class CmtBlock : public Module<T> {
 public:
  CmtBlock(int dim, int heads, int reduction, int mlp_ratio, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& rel_pos);

 private:
  std::shared_ptr<Conv2d<T>> lpu_;
  std::shared_ptr<LayerNorm<T>> norm1_;
  std::shared_ptr<Linear<T>> q_, k_, v_, proj_;
  std::shared_ptr<Conv2d<T>> sr_;
  std::shared_ptr<LayerNorm<T>> sr_norm_;
  std::shared_ptr<LayerNorm<T>> norm2_;
  std::shared_ptr<Conv2d<T>> ffn_in_;
  std::shared_ptr<BatchNorm2d<T>> ffn_in_bn_;
  std::shared_ptr<Conv2d<T>> ffn_dw_;
  std::shared_ptr<BatchNorm2d<T>> ffn_dw_bn_;
  std::shared_ptr<Conv2d<T>> ffn_out_;
  std::shared_ptr<BatchNorm2d<T>> ffn_out_bn_;
  int heads_, reduction_;
};

// Vertical and horizontal bidirectional LSTMs over a channels-last map
// (B, H, W, C); the four hidden streams are concatenated and fused by a
// linear map to `out` channels.
template <typename T>
class BiLSTM2D : public Module<T> {
 public:
  BiLSTM2D(int channels, int hidden, int out, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);

 private:
  std::shared_ptr<Lstm<T>> v_fwd_, v_bwd_, h_fwd_, h_bwd_;
  std::shared_ptr<Linear<T>> fc_;
};

// x + BiLSTM2D(LN(x)), then x + mlp(LN(x)). (B, H, W, C).
template <typename T>
class SequencerBlock : public Module<T> {
 public:
  SequencerBlock(int dim, int hidden, int mlp_hidden, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);

 private:
  std::shared_ptr<LayerNorm<T>> norm1_;
  std::shared_ptr<BiLSTM2D<T>> mixer_;
  std::shared_ptr<LayerNorm<T>> norm2_;
  std::shared_ptr<Mlp<T>> mlp_;
};

}  // namespace tilebench::nn
