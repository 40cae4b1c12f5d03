#include "tilebench/nn/blocks.hpp"

#include <algorithm>

#include "tilebench/core/errors.hpp"

namespace tilebench::nn {

namespace {

void require_divisible(const char* what, std::int64_t h, std::int64_t w, int by) {
  if (by <= 0 || h % by != 0 || w % by != 0) {
    throw ShapeMismatch(std::string(what) + ": " + std::to_string(h) + "x" + std::to_string(w) +
                        " not divisible by " + std::to_string(by));
  }
}

}  // namespace

// ---------------------------------------------------------------- ResNet

template <typename T>
ResidualBlock<T>::ResidualBlock(int in, int width, int stride, bool bottleneck, Rng& rng) {
  out_ = bottleneck ? 4 * width : width;
  auto conv = [&](const std::string& name, int cin, int cout, int k, int s) {
    convs_.push_back(this->add_module(name, std::make_shared<Conv2d<T>>(cin, cout, k, s, k / 2, 1, false, rng)));
  };
  auto bn = [&](const std::string& name, int c) {
    norms_.push_back(this->add_module(name, std::make_shared<BatchNorm2d<T>>(c)));
  };
  if (bottleneck) {
    conv("conv1", in, width, 1, 1);
    bn("bn1", width);
    conv("conv2", width, width, 3, stride);
    bn("bn2", width);
    conv("conv3", width, out_, 1, 1);
    bn("bn3", out_);
  } else {
    conv("conv1", in, width, 3, stride);
    bn("bn1", width);
    conv("conv2", width, width, 3, 1);
    bn("bn2", width);
  }
  if (stride != 1 || in != out_) {
    shortcut_conv_ = this->add_module("shortcut_conv", std::make_shared<Conv2d<T>>(in, out_, 1, stride, 0, 1, false, rng));
    shortcut_bn_ = this->add_module("shortcut_bn", std::make_shared<BatchNorm2d<T>>(out_));
  }
}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    y = norms_[i]->forward(convs_[i]->forward(y));
    if (i + 1 < convs_.size()) y = ops::relu(y);
  }
  Tensor<T> shortcut = shortcut_conv_ ? shortcut_bn_->forward(shortcut_conv_->forward(x)) : x;
  return ops::relu(ops::add(y, shortcut));
}

// ---------------------------------------------------------------- MobileNetV2 / EfficientNet

template <typename T>
SqueezeExcite<T>::SqueezeExcite(int channels, int squeeze, Rng& rng) {
  reduce_ = this->add_module("reduce", std::make_shared<Conv2d<T>>(channels, squeeze, 1, 1, 0, 1, true, rng));
  expand_ = this->add_module("expand", std::make_shared<Conv2d<T>>(squeeze, channels, 1, 1, 0, 1, true, rng));
}

template <typename T>
Tensor<T> SqueezeExcite<T>::forward(const Tensor<T>& x) {
  if (unit_gate) return x;
  Tensor<T> s = ops::reshape(ops::global_avg_pool(x), {x.dim(0), x.dim(1), 1, 1});
  s = ops::sigmoid(expand_->forward(ops::silu(reduce_->forward(s))));
  return ops::mul(x, s);
}

template <typename T>
InvertedResidual<T>::InvertedResidual(int in, int out, Options opt, Rng& rng) {
  const int hidden = in * opt.expand_ratio;
  if (opt.expand_ratio != 1) {
    expand_ = this->add_module("expand", std::make_shared<ConvNormAct<T>>(
                                             in, hidden, typename ConvNormAct<T>::Options{1, 1, 1, false, opt.act},
                                             rng));
  }
  depthwise_ = this->add_module(
      "depthwise", std::make_shared<ConvNormAct<T>>(
                       hidden, hidden, typename ConvNormAct<T>::Options{opt.kernel, opt.stride, hidden, false, opt.act},
                       rng));
  if (opt.se_squeeze > 0) se_ = this->add_module("se", std::make_shared<SqueezeExcite<T>>(hidden, opt.se_squeeze, rng));
  project_ = this->add_module("project", std::make_shared<Conv2d<T>>(hidden, out, 1, 1, 0, 1, false, rng));
  project_bn_ = this->add_module("project_bn", std::make_shared<BatchNorm2d<T>>(out));
  residual_ = opt.stride == 1 && in == out;
}

template <typename T>
Tensor<T> InvertedResidual<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = expand_ ? expand_->forward(x) : x;
  y = depthwise_->forward(y);
  if (se_) y = se_->forward(y);
  y = project_bn_->forward(project_->forward(y));
  return residual_ ? ops::add(x, y) : y;
}

// ---------------------------------------------------------------- transformer

template <typename T>
TransformerBlock<T>::TransformerBlock(int dim, int heads, int mlp_hidden, Act act, Rng& rng) {
  norm1_ = this->add_module("norm1", std::make_shared<LayerNorm<T>>(dim));
  attn_ = this->add_module("attn", std::make_shared<SelfAttention<T>>(dim, heads, true, rng));
  norm2_ = this->add_module("norm2", std::make_shared<LayerNorm<T>>(dim));
  mlp_ = this->add_module("mlp", std::make_shared<Mlp<T>>(dim, mlp_hidden, act, rng));
}

template <typename T>
Tensor<T> TransformerBlock<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = ops::add(x, attn_->forward(norm1_->forward(x)));
  return ops::add(y, mlp_->forward(norm2_->forward(y)));
}

// ---------------------------------------------------------------- Swin

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int window) {
  if (x.rank() != 4) throw ShapeMismatch("window_partition expects (B, H, W, C)");
  const auto b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  require_divisible("window_partition", h, w, window);
  const auto nh = h / window, nw = w / window, n = std::int64_t{window} * window;
  std::vector<std::int64_t> index;
  index.reserve(x.size());
  for (std::int64_t bi = 0; bi < b; ++bi)
    for (std::int64_t i = 0; i < nh; ++i)
      for (std::int64_t j = 0; j < nw; ++j)
        for (std::int64_t py = 0; py < window; ++py)
          for (std::int64_t px = 0; px < window; ++px)
            for (std::int64_t ci = 0; ci < c; ++ci)
              index.push_back(((bi * h + i * window + py) * w + j * window + px) * c + ci);
  return ops::gather(x, {b * nh * nw, n, c}, std::move(index));
}

template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, int window, std::int64_t batch, std::int64_t h, std::int64_t w) {
  require_divisible("window_merge", h, w, window);
  const auto nh = h / window, nw = w / window, n = std::int64_t{window} * window;
  if (windows.rank() != 3 || windows.dim(0) != batch * nh * nw || windows.dim(1) != n) {
    throw ShapeMismatch("window_merge: " + shape_string(windows.shape()));
  }
  const auto c = windows.dim(2);
  std::vector<std::int64_t> index;
  index.reserve(windows.size());
  for (std::int64_t bi = 0; bi < batch; ++bi)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const auto win = (bi * nh + y / window) * nw + x / window;
        const auto pos = (y % window) * window + x % window;
        for (std::int64_t ci = 0; ci < c; ++ci) index.push_back((win * n + pos) * c + ci);
      }
  return ops::gather(windows, {batch, h, w, c}, std::move(index));
}

template <typename T>
Tensor<T> cyclic_shift(const Tensor<T>& x, int shift) {
  if (x.rank() != 4) throw ShapeMismatch("cyclic_shift expects (B, H, W, C)");
  const auto b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  std::vector<std::int64_t> index;
  index.reserve(x.size());
  for (std::int64_t bi = 0; bi < b; ++bi)
    for (std::int64_t i = 0; i < h; ++i)
      for (std::int64_t j = 0; j < w; ++j) {
        const auto si = ((i + shift) % h + h) % h;
        const auto sj = ((j + shift) % w + w) % w;
        for (std::int64_t ci = 0; ci < c; ++ci) index.push_back(((bi * h + si) * w + sj) * c + ci);
      }
  return ops::gather(x, x.shape(), std::move(index));
}

template <typename T>
Tensor<T> shifted_window_mask(std::int64_t h, std::int64_t w, int window, int shift) {
  require_divisible("shifted_window_mask", h, w, window);
  auto region = [&](std::int64_t v, std::int64_t size) { return v < size - window ? 0 : v < size - shift ? 1 : 2; };
  const auto nh = h / window, nw = w / window, n = std::int64_t{window} * window;
  std::vector<T> mask(static_cast<std::size_t>(nh * nw * n * n));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < nh; ++i)
    for (std::int64_t j = 0; j < nw; ++j) {
      for (std::int64_t p = 0; p < n; ++p) {
        labels[p] = region(i * window + p / window, h) * 3 + region(j * window + p % window, w);
      }
      T* m = mask.data() + (i * nw + j) * n * n;
      for (std::int64_t p = 0; p < n; ++p)
        for (std::int64_t q = 0; q < n; ++q) m[p * n + q] = labels[p] == labels[q] ? T(0) : T(-100);
    }
  return Tensor<T>::from({nh * nw, n, n}, std::move(mask));
}

std::vector<std::int64_t> relative_position_index(int window) {
  const std::int64_t n = std::int64_t{window} * window;
  const std::int64_t span = 2 * window - 1;
  std::vector<std::int64_t> index(static_cast<std::size_t>(n * n));
  for (std::int64_t p = 0; p < n; ++p)
    for (std::int64_t q = 0; q < n; ++q) {
      const auto dy = p / window - q / window + window - 1;
      const auto dx = p % window - q % window + window - 1;
      index[p * n + q] = dy * span + dx;
    }
  return index;
}

template <typename T>
SwinBlock<T>::SwinBlock(int dim, int heads, int window, int shift, int mlp_hidden, Rng& rng)
    : heads_(heads), window_(window), shift_(shift) {
  norm1_ = this->add_module("norm1", std::make_shared<LayerNorm<T>>(dim));
  attn_ = this->add_module("attn", std::make_shared<SelfAttention<T>>(dim, heads, true, rng));
  const std::int64_t span = 2 * window - 1;
  bias_table_ = this->add_parameter("relative_position_bias_table", trunc_normal<T>({span * span, heads}, rng));
  norm2_ = this->add_module("norm2", std::make_shared<LayerNorm<T>>(dim));
  mlp_ = this->add_module("mlp", std::make_shared<Mlp<T>>(dim, mlp_hidden, Act::GELU, rng));
  bias_index_ = relative_position_index(window);
}

template <typename T>
Tensor<T> SwinBlock<T>::forward(const Tensor<T>& x, std::int64_t h, std::int64_t w) {
  if (x.rank() != 3 || x.dim(1) != h * w) throw ShapeMismatch("SwinBlock input " + shape_string(x.shape()));
  const auto b = x.dim(0), c = x.dim(2);
  const std::int64_t n = std::int64_t{window_} * window_;
  std::vector<std::int64_t> index(static_cast<std::size_t>(heads_ * n * n));
  for (std::int64_t hd = 0; hd < heads_; ++hd)
    for (std::int64_t k = 0; k < n * n; ++k) index[hd * n * n + k] = bias_index_[k] * heads_ + hd;
  Tensor<T> bias = ops::gather(bias_table_, {1, heads_, n, n}, std::move(index));
  int groups = 1;
  if (shift_ > 0) {
    Tensor<T> mask = shifted_window_mask<T>(h, w, window_, shift_);
    groups = static_cast<int>(mask.dim(0));
    bias = ops::add(bias, ops::reshape(mask, {groups, 1, n, n}));
  }

  Tensor<T> y = ops::reshape(norm1_->forward(x), {b, h, w, c});
  if (shift_ > 0) y = cyclic_shift(y, shift_);
  y = attn_->forward(window_partition(y, window_), bias, groups);
  y = window_merge(y, window_, b, h, w);
  if (shift_ > 0) y = cyclic_shift(y, -shift_);
  Tensor<T> out = ops::add(x, ops::reshape(y, {b, h * w, c}));
  return ops::add(out, mlp_->forward(norm2_->forward(out)));
}

template <typename T>
std::int64_t SwinBlock<T>::score_entries_per_token() const {
  const Shape s = attn_->last_score_shape();
  if (s.size() != 4) return 0;
  // (windows, heads, N, N) over windows * N query tokens and `heads` heads.
  return numel(s) / (s[0] * s[2] * s[1]);
}

template <typename T>
PatchMerging<T>::PatchMerging(int dim, int out, Rng& rng) {
  norm_ = this->add_module("norm", std::make_shared<LayerNorm<T>>(4 * dim));
  reduction_ = this->add_module("reduction", std::make_shared<Linear<T>>(4 * dim, out, false, rng));
}

template <typename T>
Tensor<T> PatchMerging<T>::forward(const Tensor<T>& x, std::int64_t h, std::int64_t w) {
  require_divisible("PatchMerging", h, w, 2);
  if (x.rank() != 3 || x.dim(1) != h * w) throw ShapeMismatch("PatchMerging input " + shape_string(x.shape()));
  const auto b = x.dim(0), c = x.dim(2), h2 = h / 2, w2 = w / 2;
  constexpr int dy[4] = {0, 1, 0, 1};
  constexpr int dx[4] = {0, 0, 1, 1};
  std::vector<std::int64_t> index;
  index.reserve(x.size());
  for (std::int64_t bi = 0; bi < b; ++bi)
    for (std::int64_t i = 0; i < h2; ++i)
      for (std::int64_t j = 0; j < w2; ++j)
        for (int q = 0; q < 4; ++q)
          for (std::int64_t ci = 0; ci < c; ++ci)
            index.push_back((bi * h * w + (2 * i + dy[q]) * w + 2 * j + dx[q]) * c + ci);
  Tensor<T> merged = ops::gather(x, {b, h2 * w2, 4 * c}, std::move(index));
  return reduction_->forward(norm_->forward(merged));
}

// ---------------------------------------------------------------- MobileViT

template <typename T>
Tensor<T> unfold_patches(const Tensor<T>& x, int patch) {
  if (x.rank() != 4) throw ShapeMismatch("unfold_patches expects (B, C, H, W)");
  const auto b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  require_divisible("unfold_patches", h, w, patch);
  const auto nh = h / patch, nw = w / patch, p2 = std::int64_t{patch} * patch;
  std::vector<std::int64_t> index;
  index.reserve(x.size());
  for (std::int64_t bi = 0; bi < b; ++bi)
    for (std::int64_t p = 0; p < p2; ++p)
      for (std::int64_t i = 0; i < nh; ++i)
        for (std::int64_t j = 0; j < nw; ++j)
          for (std::int64_t ci = 0; ci < c; ++ci)
            index.push_back(((bi * c + ci) * h + i * patch + p / patch) * w + j * patch + p % patch);
  return ops::gather(x, {b * p2, nh * nw, c}, std::move(index));
}

template <typename T>
Tensor<T> fold_patches(const Tensor<T>& seq, int patch, std::int64_t batch, std::int64_t h, std::int64_t w) {
  require_divisible("fold_patches", h, w, patch);
  const auto nh = h / patch, nw = w / patch, p2 = std::int64_t{patch} * patch;
  if (seq.rank() != 3 || seq.dim(0) != batch * p2 || seq.dim(1) != nh * nw) {
    throw ShapeMismatch("fold_patches: " + shape_string(seq.shape()));
  }
  const auto c = seq.dim(2);
  std::vector<std::int64_t> index;
  index.reserve(seq.size());
  for (std::int64_t bi = 0; bi < batch; ++bi)
    for (std::int64_t ci = 0; ci < c; ++ci)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          const auto p = (y % patch) * patch + x % patch;
          const auto n = (y / patch) * nw + x / patch;
          index.push_back(((bi * p2 + p) * nh * nw + n) * c + ci);
        }
  return ops::gather(seq, {batch, c, h, w}, std::move(index));
}

template <typename T>
MobileViTBlock<T>::MobileViTBlock(int channels, int dim, int depth, int heads, int mlp_hidden, int patch, Rng& rng)
    : patch_(patch) {
  using Opt = typename ConvNormAct<T>::Options;
  local_ = this->add_module("conv_kxk", std::make_shared<ConvNormAct<T>>(channels, channels, Opt{3, 1, 1, false, Act::SiLU}, rng));
  to_dim_ = this->add_module("conv_1x1", std::make_shared<Conv2d<T>>(channels, dim, 1, 1, 0, 1, false, rng));
  for (int i = 0; i < depth; ++i) {
    layers_.push_back(this->add_module("transformer" + std::to_string(i),
                                       std::make_shared<TransformerBlock<T>>(dim, heads, mlp_hidden, Act::SiLU, rng)));
  }
  norm_ = this->add_module("norm", std::make_shared<LayerNorm<T>>(dim));
  from_dim_ = this->add_module("conv_proj", std::make_shared<ConvNormAct<T>>(dim, channels, Opt{1, 1, 1, false, Act::SiLU}, rng));
  fusion_ = this->add_module("conv_fusion",
                             std::make_shared<ConvNormAct<T>>(2 * channels, channels, Opt{3, 1, 1, false, Act::SiLU}, rng));
}

template <typename T>
Tensor<T> MobileViTBlock<T>::forward(const Tensor<T>& x) {
  const auto b = x.dim(0), h = x.dim(2), w = x.dim(3);
  Tensor<T> y = to_dim_->forward(local_->forward(x));
  Tensor<T> seq = unfold_patches(y, patch_);
  for (auto& layer : layers_) seq = layer->forward(seq);
  seq = norm_->forward(seq);
  y = from_dim_->forward(fold_patches(seq, patch_, b, h, w));
  return fusion_->forward(ops::concat<T>({x, y}, 1));
}

// ---------------------------------------------------------------- CMT

template <typename T>
CmtStem<T>::CmtStem(int in, int width, Rng& rng) {
  using Opt = typename ConvNormAct<T>::Options;
  for (int i = 0; i < 3; ++i) {
    convs_.push_back(this->add_module(
        "conv" + std::to_string(i + 1),
        std::make_shared<ConvNormAct<T>>(i == 0 ? in : width, width, Opt{3, i == 0 ? 2 : 1, 1, true, Act::GELU, true},
                                         rng)));
  }
}

template <typename T>
Tensor<T> CmtStem<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& c : convs_) y = c->forward(y);
  return y;
}

template <typename T>
CmtBlock<T>::CmtBlock(int dim, int heads, int reduction, int mlp_ratio, Rng& rng)
    : heads_(heads), reduction_(reduction) {
  lpu_ = this->add_module("lpu", std::make_shared<Conv2d<T>>(dim, dim, 3, 1, 1, dim, true, rng));
  norm1_ = this->add_module("norm1", std::make_shared<LayerNorm<T>>(dim));
  q_ = this->add_module("q", std::make_shared<Linear<T>>(dim, dim, true, rng));
  k_ = this->add_module("k", std::make_shared<Linear<T>>(dim, dim, true, rng));
  v_ = this->add_module("v", std::make_shared<Linear<T>>(dim, dim, true, rng));
  proj_ = this->add_module("proj", std::make_shared<Linear<T>>(dim, dim, true, rng));
  if (reduction > 1) {
    sr_ = this->add_module("sr", std::make_shared<Conv2d<T>>(dim, dim, reduction, reduction, 0, dim, true, rng));
    sr_norm_ = this->add_module("sr_norm", std::make_shared<LayerNorm<T>>(dim));
  }
  norm2_ = this->add_module("norm2", std::make_shared<LayerNorm<T>>(dim));
  const int hidden = dim * mlp_ratio;
  ffn_in_ = this->add_module("ffn_in", std::make_shared<Conv2d<T>>(dim, hidden, 1, 1, 0, 1, true, rng));
  ffn_in_bn_ = this->add_module("ffn_in_bn", std::make_shared<BatchNorm2d<T>>(hidden));
  ffn_dw_ = this->add_module("ffn_dw", std::make_shared<Conv2d<T>>(hidden, hidden, 3, 1, 1, hidden, true, rng));
  ffn_dw_bn_ = this->add_module("ffn_dw_bn", std::make_shared<BatchNorm2d<T>>(hidden));
  ffn_out_ = this->add_module("ffn_out", std::make_shared<Conv2d<T>>(hidden, dim, 1, 1, 0, 1, true, rng));
  ffn_out_bn_ = this->add_module("ffn_out_bn", std::make_shared<BatchNorm2d<T>>(dim));
}

template <typename T>
Tensor<T> CmtBlock<T>::forward(const Tensor<T>& x, const Tensor<T>& rel_pos) {
  const auto h = x.dim(2), w = x.dim(3);
  Tensor<T> map = ops::add(x, lpu_->forward(x));
  Tensor<T> tokens = to_tokens(map);
  Tensor<T> normed = norm1_->forward(tokens);
  Tensor<T> kv = normed;
  if (sr_) kv = sr_norm_->forward(to_tokens(sr_->forward(to_map(normed, h, w))));
  Tensor<T> attn = multi_head_attention(q_->forward(normed), k_->forward(kv), v_->forward(kv), heads_, rel_pos);
  tokens = ops::add(tokens, proj_->forward(attn));

  Tensor<T> f = to_map(norm2_->forward(tokens), h, w);
  f = ffn_in_bn_->forward(ops::gelu(ffn_in_->forward(f)));
  f = ffn_dw_bn_->forward(ops::gelu(ops::add(f, ffn_dw_->forward(f))));
  f = ffn_out_bn_->forward(ffn_out_->forward(f));
  return to_map(ops::add(tokens, to_tokens(f)), h, w);
}

// ---------------------------------------------------------------- Sequencer2D

template <typename T>
BiLSTM2D<T>::BiLSTM2D(int channels, int hidden, int out, Rng& rng) {
  v_fwd_ = this->add_module("rnn_v", std::make_shared<Lstm<T>>(channels, hidden, rng));
  v_bwd_ = this->add_module("rnn_v_reverse", std::make_shared<Lstm<T>>(channels, hidden, rng));
  h_fwd_ = this->add_module("rnn_h", std::make_shared<Lstm<T>>(channels, hidden, rng));
  h_bwd_ = this->add_module("rnn_h_reverse", std::make_shared<Lstm<T>>(channels, hidden, rng));
  fc_ = this->add_module("fc", std::make_shared<Linear<T>>(4 * hidden, out, true, rng));
}

template <typename T>
Tensor<T> BiLSTM2D<T>::forward(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeMismatch("BiLSTM2D expects (B, H, W, C), got " + shape_string(x.shape()));
  const auto b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  // Columns: sequences run along H.
  Tensor<T> cols = ops::reshape(ops::permute(x, {0, 2, 1, 3}), {b * w, h, c});
  Tensor<T> v = ops::concat<T>({v_fwd_->forward(cols, false), v_bwd_->forward(cols, true)}, 2);
  v = ops::permute(ops::reshape(v, {b, w, h, v.dim(2)}), {0, 2, 1, 3});
  // Rows: sequences run along W.
  Tensor<T> rows = ops::reshape(x, {b * h, w, c});
  Tensor<T> hz = ops::concat<T>({h_fwd_->forward(rows, false), h_bwd_->forward(rows, true)}, 2);
  hz = ops::reshape(hz, {b, h, w, hz.dim(2)});
  return fc_->forward(ops::concat<T>({v, hz}, 3));
}

template <typename T>
SequencerBlock<T>::SequencerBlock(int dim, int hidden, int mlp_hidden, Rng& rng) {
  norm1_ = this->add_module("norm1", std::make_shared<LayerNorm<T>>(dim));
  mixer_ = this->add_module("rnn_tokens", std::make_shared<BiLSTM2D<T>>(dim, hidden, dim, rng));
  norm2_ = this->add_module("norm2", std::make_shared<LayerNorm<T>>(dim));
  mlp_ = this->add_module("mlp", std::make_shared<Mlp<T>>(dim, mlp_hidden, Act::GELU, rng));
}

template <typename T>
Tensor<T> SequencerBlock<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = ops::add(x, mixer_->forward(norm1_->forward(x)));
  return ops::add(y, mlp_->forward(norm2_->forward(y)));
}

#define TILEBENCH_INSTANTIATE_BLOCKS(T)                                                            \
  template class ResidualBlock<T>;                                                                 \
  template class SqueezeExcite<T>;                                                                 \
  template class InvertedResidual<T>;                                                              \
  template class TransformerBlock<T>;                                                              \
  template Tensor<T> window_partition(const Tensor<T>&, int);                                      \
  template Tensor<T> window_merge(const Tensor<T>&, int, std::int64_t, std::int64_t, std::int64_t); \
  template Tensor<T> cyclic_shift(const Tensor<T>&, int);                                          \
  template Tensor<T> shifted_window_mask<T>(std::int64_t, std::int64_t, int, int);                 \
  template class SwinBlock<T>;                                                                     \
  template class PatchMerging<T>;                                                                  \
  template Tensor<T> unfold_patches(const Tensor<T>&, int);                                        \
  template Tensor<T> fold_patches(const Tensor<T>&, int, std::int64_t, std::int64_t, std::int64_t); \
  template class MobileViTBlock<T>;                                                                \
  template class CmtStem<T>;                                                                       \
  template class CmtBlock<T>;                                                                      \
  template class BiLSTM2D<T>;                                                                      \
  template class SequencerBlock<T>;

TILEBENCH_INSTANTIATE_BLOCKS(float)
TILEBENCH_INSTANTIATE_BLOCKS(double)

}  // namespace tilebench::nn
