#include "tilebench/nn/models.hpp"

#include <algorithm>

#include "tilebench/core/errors.hpp"

namespace tilebench::nn {

namespace {

template <typename T>
typename ConvNormAct<T>::Options conv_opt(int kernel, int stride, Act act, int groups = 1, bool bias = false) {
  return {kernel, stride, groups, bias, act, false};
}

void check_input(const ArchitectureSpec& spec, const Shape& shape) {
  if (shape.size() != 4 || shape[1] != 3) {
    throw ShapeMismatch(family_key(spec.family) + " expects (B, 3, H, W), got " + shape_string(shape));
  }
}

// ---------------------------------------------------------------- ResNet

template <typename T>
class ResNet : public Model<T> {
 public:
  ResNet(const ArchitectureSpec& s, Rng& rng) : Model<T>(s) {
    stem_ = this->add_module("stem", std::make_shared<Conv2d<T>>(3, s.stem_width, 7, 2, 3, 1, false, rng));
    stem_bn_ = this->add_module("stem_bn", std::make_shared<BatchNorm2d<T>>(s.stem_width));
    const bool bottleneck = s.family == Family::ResNet50;
    int in = s.stem_width;
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      for (int d = 0; d < s.depths[i]; ++d) {
        auto block = std::make_shared<ResidualBlock<T>>(in, s.widths[i], d == 0 ? s.strides[i] : 1, bottleneck, rng);
        in = block->out_channels();
        blocks_.push_back(this->add_module("layer" + std::to_string(i + 1) + "." + std::to_string(d), block));
      }
    }
    fc_ = this->add_module("fc", std::make_shared<Linear<T>>(in, s.num_classes, true, rng));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    check_input(this->spec(), x.shape());
    Tensor<T> y = ops::max_pool2d(ops::relu(stem_bn_->forward(stem_->forward(x))), 3, 2, 1);
    for (auto& b : blocks_) y = b->forward(y);
    return fc_->forward(ops::global_avg_pool(y));
  }

 private:
  std::shared_ptr<Conv2d<T>> stem_;
  std::shared_ptr<BatchNorm2d<T>> stem_bn_;
  std::vector<std::shared_ptr<ResidualBlock<T>>> blocks_;
  std::shared_ptr<Linear<T>> fc_;
};

// ---------------------------------------------------------------- MobileNetV2 / EfficientNet

template <typename T>
class MobileNet : public Model<T> {
 public:
  MobileNet(const ArchitectureSpec& s, Rng& rng) : Model<T>(s) {
    const bool efficient = s.family == Family::EfficientNet;
    const Act act = efficient ? Act::SiLU : Act::ReLU6;
    stem_ = this->add_module("stem", std::make_shared<ConvNormAct<T>>(3, s.stem_width, conv_opt<T>(3, 2, act), rng));
    int in = s.stem_width;
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      for (int d = 0; d < s.depths[i]; ++d) {
        typename InvertedResidual<T>::Options o;
        o.expand_ratio = s.expand_ratios[i];
        o.kernel = s.kernels[i];
        o.stride = d == 0 ? s.strides[i] : 1;
        o.act = act;
        o.se_squeeze = efficient ? std::max(1, in / 4) : 0;
        blocks_.push_back(this->add_module("blocks." + std::to_string(i) + "." + std::to_string(d),
                                           std::make_shared<InvertedResidual<T>>(in, s.widths[i], o, rng)));
        in = s.widths[i];
      }
    }
    head_ = this->add_module("head", std::make_shared<ConvNormAct<T>>(in, s.head_width, conv_opt<T>(1, 1, act), rng));
    fc_ = this->add_module("fc", std::make_shared<Linear<T>>(s.head_width, s.num_classes, true, rng));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    check_input(this->spec(), x.shape());
    Tensor<T> y = stem_->forward(x);
    for (auto& b : blocks_) y = b->forward(y);
    return fc_->forward(ops::global_avg_pool(head_->forward(y)));
  }

 private:
  std::shared_ptr<ConvNormAct<T>> stem_;
  std::vector<std::shared_ptr<InvertedResidual<T>>> blocks_;
  std::shared_ptr<ConvNormAct<T>> head_;
  std::shared_ptr<Linear<T>> fc_;
};

// ---------------------------------------------------------------- Swin

template <typename T>
class Swin : public Model<T> {
 public:
  Swin(const ArchitectureSpec& s, Rng& rng) : Model<T>(s) {
    patch_embed_ = this->add_module("patch_embed",
                                    std::make_shared<Conv2d<T>>(3, s.widths[0], s.patch, s.patch, 0, 1, true, rng));
    patch_norm_ = this->add_module("patch_norm", std::make_shared<LayerNorm<T>>(s.widths[0]));
    int res = s.input_px / s.patch;
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      const int window = std::min(s.window, res);
      const int shift = res <= s.window ? 0 : window / 2;
      std::vector<std::shared_ptr<SwinBlock<T>>> stage;
      for (int d = 0; d < s.depths[i]; ++d) {
        stage.push_back(this->add_module(
            "stages." + std::to_string(i) + "." + std::to_string(d),
            std::make_shared<SwinBlock<T>>(s.widths[i], s.heads[i], window, d % 2 ? shift : 0,
                                           s.widths[i] * s.mlp_ratio, rng)));
      }
      stages_.push_back(std::move(stage));
      if (i + 1 < s.widths.size()) {
        merges_.push_back(this->add_module("merge." + std::to_string(i),
                                           std::make_shared<PatchMerging<T>>(s.widths[i], s.widths[i + 1], rng)));
        res /= 2;
      }
    }
    norm_ = this->add_module("norm", std::make_shared<LayerNorm<T>>(s.widths.back()));
    head_ = this->add_module("head", std::make_shared<Linear<T>>(s.widths.back(), s.num_classes, true, rng));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    check_input(this->spec(), x.shape());
    Tensor<T> map = patch_embed_->forward(x);
    std::int64_t h = map.dim(2), w = map.dim(3);
    Tensor<T> y = patch_norm_->forward(to_tokens(map));
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      for (auto& b : stages_[i]) y = b->forward(y, h, w);
      if (i < merges_.size()) {
        y = merges_[i]->forward(y, h, w);
        h /= 2;
        w /= 2;
      }
    }
    return head_->forward(ops::mean_dim(norm_->forward(y), 1));
  }

 private:
  std::shared_ptr<Conv2d<T>> patch_embed_;
  std::shared_ptr<LayerNorm<T>> patch_norm_;
  std::vector<std::vector<std::shared_ptr<SwinBlock<T>>>> stages_;
  std::vector<std::shared_ptr<PatchMerging<T>>> merges_;
  std::shared_ptr<LayerNorm<T>> norm_;
  std::shared_ptr<Linear<T>> head_;
};

// ---------------------------------------------------------------- MobileViT

template <typename T>
class MobileViT : public Model<T> {
 public:
  MobileViT(const ArchitectureSpec& s, Rng& rng) : Model<T>(s) {
    stem_ = this->add_module("stem", std::make_shared<ConvNormAct<T>>(3, s.stem_width, conv_opt<T>(3, 2, Act::SiLU), rng));
    int in = s.stem_width;
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      for (int d = 0; d < s.depths[i]; ++d) {
        typename InvertedResidual<T>::Options o;
        o.expand_ratio = s.expand_ratios[i];
        o.kernel = 3;
        o.stride = d == 0 ? s.strides[i] : 1;
        o.act = Act::SiLU;
        ir_.push_back(this->add_module("stages." + std::to_string(i) + ".ir" + std::to_string(d),
                                       std::make_shared<InvertedResidual<T>>(in, s.widths[i], o, rng)));
        in = s.widths[i];
      }
      stage_ends_.push_back(ir_.size());
      if (s.hidden_dims[i] > 0) {
        mvit_.push_back(this->add_module(
            "stages." + std::to_string(i) + ".mobilevit",
            std::make_shared<MobileViTBlock<T>>(in, s.hidden_dims[i], s.attn_depths[i], s.heads[i],
                                                s.hidden_dims[i] * s.mlp_ratio, s.patch, rng)));
      } else {
        mvit_.push_back(nullptr);
      }
    }
    head_ = this->add_module("final_conv", std::make_shared<ConvNormAct<T>>(in, s.head_width, conv_opt<T>(1, 1, Act::SiLU), rng));
    fc_ = this->add_module("fc", std::make_shared<Linear<T>>(s.head_width, s.num_classes, true, rng));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    check_input(this->spec(), x.shape());
    Tensor<T> y = stem_->forward(x);
    std::size_t next = 0;
    for (std::size_t i = 0; i < stage_ends_.size(); ++i) {
      for (; next < stage_ends_[i]; ++next) y = ir_[next]->forward(y);
      if (mvit_[i]) y = mvit_[i]->forward(y);
    }
    return fc_->forward(ops::global_avg_pool(head_->forward(y)));
  }

 private:
  std::shared_ptr<ConvNormAct<T>> stem_;
  std::vector<std::shared_ptr<InvertedResidual<T>>> ir_;
  std::vector<std::size_t> stage_ends_;
  std::vector<std::shared_ptr<MobileViTBlock<T>>> mvit_;
  std::shared_ptr<ConvNormAct<T>> head_;
  std::shared_ptr<Linear<T>> fc_;
};

// ---------------------------------------------------------------- CMT

template <typename T>
class Cmt : public Model<T> {
 public:
  Cmt(const ArchitectureSpec& s, Rng& rng) : Model<T>(s) {
    stem_ = this->add_module("stem", std::make_shared<CmtStem<T>>(3, s.stem_width, rng));
    int in = s.stem_width;
    int res = s.input_px / 2;
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      const std::string p = "stages." + std::to_string(i) + ".";
      res /= 2;
      embeds_.push_back(this->add_module(p + "patch_embed", std::make_shared<Conv2d<T>>(in, s.widths[i], 2, 2, 0, 1, true, rng)));
      embed_norms_.push_back(this->add_module(p + "patch_norm", std::make_shared<LayerNorm<T>>(s.widths[i])));
      const std::int64_t n = std::int64_t{res} * res;
      const std::int64_t kv = (res / s.reductions[i]) * std::int64_t{res / s.reductions[i]};
      rel_pos_.push_back(this->add_parameter(p + "relative_pos", trunc_normal<T>({s.heads[i], n, kv}, rng)));
      std::vector<std::shared_ptr<CmtBlock<T>>> stage;
      for (int d = 0; d < s.depths[i]; ++d) {
        stage.push_back(this->add_module(p + std::to_string(d), std::make_shared<CmtBlock<T>>(s.widths[i], s.heads[i],
                                                                                          s.reductions[i], s.mlp_ratio, rng)));
      }
      stages_.push_back(std::move(stage));
      in = s.widths[i];
    }
    head_ = this->add_module("head_conv", std::make_shared<ConvNormAct<T>>(in, s.head_width,
                                                                           conv_opt<T>(1, 1, Act::SiLU, 1, true), rng));
    fc_ = this->add_module("fc", std::make_shared<Linear<T>>(s.head_width, s.num_classes, true, rng));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    check_input(this->spec(), x.shape());
    Tensor<T> y = stem_->forward(x);
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      y = embeds_[i]->forward(y);
      y = to_map(embed_norms_[i]->forward(to_tokens(y)), y.dim(2), y.dim(3));
      for (auto& b : stages_[i]) y = b->forward(y, rel_pos_[i]);
    }
    return fc_->forward(ops::global_avg_pool(head_->forward(y)));
  }

 private:
  std::shared_ptr<CmtStem<T>> stem_;
  std::vector<std::shared_ptr<Conv2d<T>>> embeds_;
  std::vector<std::shared_ptr<LayerNorm<T>>> embed_norms_;
  std::vector<Tensor<T>> rel_pos_;
  std::vector<std::vector<std::shared_ptr<CmtBlock<T>>>> stages_;
  std::shared_ptr<ConvNormAct<T>> head_;
  std::shared_ptr<Linear<T>> fc_;
};

// ---------------------------------------------------------------- Sequencer2D

template <typename T>
class Sequencer : public Model<T> {
 public:
  Sequencer(const ArchitectureSpec& s, Rng& rng) : Model<T>(s) {
    int in = 3;
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      const std::string p = "stages." + std::to_string(i) + ".";
      downs_.push_back(this->add_module(p + "patch_embed", std::make_shared<Conv2d<T>>(in, s.widths[i], s.patch_sizes[i],
                                                                                     s.patch_sizes[i], 0, 1, true, rng)));
      std::vector<std::shared_ptr<SequencerBlock<T>>> stage;
      for (int d = 0; d < s.depths[i]; ++d) {
        stage.push_back(this->add_module(p + std::to_string(d),
                                         std::make_shared<SequencerBlock<T>>(s.widths[i], s.hidden_dims[i],
                                                                             s.widths[i] * s.mlp_ratio, rng)));
      }
      stages_.push_back(std::move(stage));
      in = s.widths[i];
    }
    norm_ = this->add_module("norm", std::make_shared<LayerNorm<T>>(in));
    head_ = this->add_module("head", std::make_shared<Linear<T>>(in, s.num_classes, true, rng));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    check_input(this->spec(), x.shape());
    Tensor<T> y;  // channels-last (B, H, W, C)
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      Tensor<T> map = i == 0 ? x : ops::permute(y, {0, 3, 1, 2});
      y = ops::permute(downs_[i]->forward(map), {0, 2, 3, 1});
      for (auto& b : stages_[i]) y = b->forward(y);
    }
    y = ops::reshape(norm_->forward(y), {y.dim(0), y.dim(1) * y.dim(2), y.dim(3)});
    return head_->forward(ops::mean_dim(y, 1));
  }

 private:
  std::vector<std::shared_ptr<Conv2d<T>>> downs_;
  std::vector<std::vector<std::shared_ptr<SequencerBlock<T>>>> stages_;
  std::shared_ptr<LayerNorm<T>> norm_;
  std::shared_ptr<Linear<T>> head_;
};

// ---------------------------------------------------------------- counting

std::int64_t conv_params(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t groups = 1, bool bias = false) {
  return out * (in / groups) * k * k + (bias ? out : 0);
}
std::int64_t linear_params(std::int64_t in, std::int64_t out, bool bias = true) { return in * out + (bias ? out : 0); }
std::int64_t norm_params(std::int64_t c) { return 2 * c; }
std::int64_t lstm_params(std::int64_t in, std::int64_t h) { return 4 * h * in + 4 * h * h + 8 * h; }

std::int64_t transformer_params(std::int64_t dim, std::int64_t mlp_hidden) {
  return norm_params(dim) + linear_params(dim, 3 * dim) + linear_params(dim, dim) + norm_params(dim) +
         linear_params(dim, mlp_hidden) + linear_params(mlp_hidden, dim);
}

std::int64_t inverted_residual_params(std::int64_t in, std::int64_t out, std::int64_t expand, std::int64_t kernel,
                                      std::int64_t se_squeeze) {
  const std::int64_t hidden = in * expand;
  std::int64_t n = 0;
  if (expand != 1) n += conv_params(in, hidden, 1) + norm_params(hidden);
  n += conv_params(hidden, hidden, kernel, hidden) + norm_params(hidden);
  if (se_squeeze > 0) n += conv_params(hidden, se_squeeze, 1, 1, true) + conv_params(se_squeeze, hidden, 1, 1, true);
  return n + conv_params(hidden, out, 1) + norm_params(out);
}

std::int64_t count_resnet(const ArchitectureSpec& s) {
  const bool bottleneck = s.family == Family::ResNet50;
  std::int64_t n = conv_params(3, s.stem_width, 7) + norm_params(s.stem_width);
  std::int64_t in = s.stem_width;
  for (std::size_t i = 0; i < s.widths.size(); ++i) {
    const std::int64_t w = s.widths[i];
    const std::int64_t out = bottleneck ? 4 * w : w;
    for (int d = 0; d < s.depths[i]; ++d) {
      const int stride = d == 0 ? s.strides[i] : 1;
      if (bottleneck) {
        n += conv_params(in, w, 1) + norm_params(w) + conv_params(w, w, 3) + norm_params(w) + conv_params(w, out, 1) +
             norm_params(out);
      } else {
        n += conv_params(in, w, 3) + norm_params(w) + conv_params(w, w, 3) + norm_params(w);
      }
      if (stride != 1 || in != out) n += conv_params(in, out, 1) + norm_params(out);
      in = out;
    }
  }
  return n + linear_params(in, s.num_classes);
}

std::int64_t count_mobilenet(const ArchitectureSpec& s) {
  const bool efficient = s.family == Family::EfficientNet;
  std::int64_t n = conv_params(3, s.stem_width, 3) + norm_params(s.stem_width);
  std::int64_t in = s.stem_width;
  for (std::size_t i = 0; i < s.widths.size(); ++i) {
    for (int d = 0; d < s.depths[i]; ++d) {
      const std::int64_t se = efficient ? std::max<std::int64_t>(1, in / 4) : 0;
      n += inverted_residual_params(in, s.widths[i], s.expand_ratios[i], s.kernels[i], se);
      in = s.widths[i];
    }
  }
  return n + conv_params(in, s.head_width, 1) + norm_params(s.head_width) + linear_params(s.head_width, s.num_classes);
}

std::int64_t count_vit(const ArchitectureSpec& s) {
  const std::int64_t c = s.widths[0];
  const std::int64_t tokens = std::int64_t{s.input_px / s.patch} * (s.input_px / s.patch) + 1;
  return conv_params(3, c, s.patch, 1, true) + c + tokens * c + s.depths[0] * transformer_params(c, c * s.mlp_ratio) +
         norm_params(c) + linear_params(c, s.num_classes);
}

std::int64_t count_swin(const ArchitectureSpec& s) {
  std::int64_t n = conv_params(3, s.widths[0], s.patch, 1, true) + norm_params(s.widths[0]);
  int res = s.input_px / s.patch;
  for (std::size_t i = 0; i < s.widths.size(); ++i) {
    const std::int64_t c = s.widths[i];
    const std::int64_t span = 2 * std::min(s.window, res) - 1;
    n += s.depths[i] * (transformer_params(c, c * s.mlp_ratio) + span * span * s.heads[i]);
    if (i + 1 < s.widths.size()) {
      n += norm_params(4 * c) + linear_params(4 * c, s.widths[i + 1], false);
      res /= 2;
    }
  }
  return n + norm_params(s.widths.back()) + linear_params(s.widths.back(), s.num_classes);
}

std::int64_t count_mobilevit(const ArchitectureSpec& s) {
  std::int64_t n = conv_params(3, s.stem_width, 3) + norm_params(s.stem_width);
  std::int64_t in = s.stem_width;
  for (std::size_t i = 0; i < s.widths.size(); ++i) {
    for (int d = 0; d < s.depths[i]; ++d) {
      n += inverted_residual_params(in, s.widths[i], s.expand_ratios[i], 3, 0);
      in = s.widths[i];
    }
    const std::int64_t dim = s.hidden_dims[i];
    if (dim > 0) {
      n += conv_params(in, in, 3) + norm_params(in) + conv_params(in, dim, 1) +
           s.attn_depths[i] * transformer_params(dim, dim * s.mlp_ratio) + norm_params(dim) + conv_params(dim, in, 1) +
           norm_params(in) + conv_params(2 * in, in, 3) + norm_params(in);
    }
  }
  return n + conv_params(in, s.head_width, 1) + norm_params(s.head_width) + linear_params(s.head_width, s.num_classes);
}

std::int64_t count_cmt(const ArchitectureSpec& s) {
  const std::int64_t w0 = s.stem_width;
  std::int64_t n = conv_params(3, w0, 3, 1, true) + norm_params(w0) + 2 * (conv_params(w0, w0, 3, 1, true) + norm_params(w0));
  std::int64_t in = w0;
  int res = s.input_px / 2;
  for (std::size_t i = 0; i < s.widths.size(); ++i) {
    const std::int64_t c = s.widths[i];
    const std::int64_t r = s.reductions[i];
    const std::int64_t hidden = c * s.mlp_ratio;
    res /= 2;
    const std::int64_t kv_side = res / r;
    n += conv_params(in, c, 2, 1, true) + norm_params(c);
    n += std::int64_t{s.heads[i]} * res * res * kv_side * kv_side;
    std::int64_t block = conv_params(c, c, 3, c, true) + norm_params(c) + 4 * linear_params(c, c) + norm_params(c) +
                         conv_params(c, hidden, 1, 1, true) + norm_params(hidden) +
                         conv_params(hidden, hidden, 3, hidden, true) + norm_params(hidden) +
                         conv_params(hidden, c, 1, 1, true) + norm_params(c);
    if (r > 1) block += conv_params(c, c, r, c, true) + norm_params(c);
    n += s.depths[i] * block;
    in = c;
  }
  return n + conv_params(in, s.head_width, 1, 1, true) + norm_params(s.head_width) +
         linear_params(s.head_width, s.num_classes);
}

std::int64_t count_sequencer(const ArchitectureSpec& s) {
  std::int64_t n = 0;
  std::int64_t in = 3;
  for (std::size_t i = 0; i < s.widths.size(); ++i) {
    const std::int64_t c = s.widths[i];
    const std::int64_t h = s.hidden_dims[i];
    n += conv_params(in, c, s.patch_sizes[i], 1, true);
    n += s.depths[i] * (norm_params(c) + 4 * lstm_params(c, h) + linear_params(4 * h, c) + norm_params(c) +
                        linear_params(c, c * s.mlp_ratio) + linear_params(c * s.mlp_ratio, c));
    in = c;
  }
  return n + norm_params(in) + linear_params(in, s.num_classes);
}

}  // namespace

// ---------------------------------------------------------------- ViT

template <typename T>
VisionTransformer<T>::VisionTransformer(const ArchitectureSpec& s, Rng& rng) : Model<T>(s) {
  const int c = s.widths[0];
  const std::int64_t tokens = std::int64_t{s.input_px / s.patch} * (s.input_px / s.patch) + 1;
  patch_embed_ = this->add_module("patch_embed", std::make_shared<Conv2d<T>>(3, c, s.patch, s.patch, 0, 1, true, rng));
  cls_token = this->add_parameter("cls_token", trunc_normal<T>({1, 1, c}, rng));
  pos_embed = this->add_parameter("pos_embed", trunc_normal<T>({1, tokens, c}, rng));
  for (int d = 0; d < s.depths[0]; ++d) {
    blocks_.push_back(this->add_module("blocks." + std::to_string(d),
                                       std::make_shared<TransformerBlock<T>>(c, s.heads[0], c * s.mlp_ratio, Act::GELU, rng)));
  }
  norm_ = this->add_module("norm", std::make_shared<LayerNorm<T>>(c));
  head_ = this->add_module("head", std::make_shared<Linear<T>>(c, s.num_classes, true, rng));
}

template <typename T>
Tensor<T> VisionTransformer<T>::embed_patches(const Tensor<T>& x) {
  check_input(this->spec(), x.shape());
  return to_tokens(patch_embed_->forward(x));
}

template <typename T>
Tensor<T> VisionTransformer<T>::with_class_token(const Tensor<T>& patches) {
  const auto b = patches.dim(0), c = patches.dim(2);
  std::vector<std::int64_t> index(static_cast<std::size_t>(b * c));
  for (std::int64_t i = 0; i < b * c; ++i) index[i] = i % c;
  return ops::concat<T>({ops::gather(cls_token, {b, 1, c}, std::move(index)), patches}, 1);
}

template <typename T>
Tensor<T> VisionTransformer<T>::encode(const Tensor<T>& tokens) {
  Tensor<T> y = tokens;
  for (auto& b : blocks_) y = b->forward(y);
  return norm_->forward(y);
}

template <typename T>
Tensor<T> VisionTransformer<T>::head(const Tensor<T>& encoded) {
  const auto b = encoded.dim(0), c = encoded.dim(2);
  return head_->forward(ops::reshape(ops::slice(encoded, 1, 0, 1), {b, c}));
}

template <typename T>
Tensor<T> VisionTransformer<T>::forward(const Tensor<T>& x) {
  Tensor<T> tokens = with_class_token(embed_patches(x));
  if (tokens.dim(1) != pos_embed.dim(1)) {
    throw ShapeMismatch("ViT built for " + std::to_string(pos_embed.dim(1)) + " tokens, got " +
                        std::to_string(tokens.dim(1)));
  }
  return head(encode(ops::add(tokens, pos_embed)));
}

template <typename T>
std::unique_ptr<Model<T>> build_model(const ArchitectureSpec& spec, std::uint64_t seed, BuildOptions opt) {
  spec.validate();
  if (spec.scale == Scale::Reference && !opt.allow_reference) {
    throw UnsupportedSpec("reference-scale " + family_display(spec.family) + " is count-only; use a toy spec");
  }
  Rng rng(seed);
  switch (spec.family) {
    case Family::ResNet18:
    case Family::ResNet50: return std::make_unique<ResNet<T>>(spec, rng);
    case Family::MobileNetV2:
    case Family::EfficientNet: return std::make_unique<MobileNet<T>>(spec, rng);
    case Family::ViT: return std::make_unique<VisionTransformer<T>>(spec, rng);
    case Family::SwinT: return std::make_unique<Swin<T>>(spec, rng);
    case Family::MobileViT: return std::make_unique<MobileViT<T>>(spec, rng);
    case Family::CMT: return std::make_unique<Cmt<T>>(spec, rng);
    case Family::Sequencer2D: return std::make_unique<Sequencer<T>>(spec, rng);
  }
  throw UnsupportedSpec("unknown family");
}

std::int64_t count_parameters(const ArchitectureSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::ResNet18:
    case Family::ResNet50: return count_resnet(spec);
    case Family::MobileNetV2:
    case Family::EfficientNet: return count_mobilenet(spec);
    case Family::ViT: return count_vit(spec);
    case Family::SwinT: return count_swin(spec);
    case Family::MobileViT: return count_mobilevit(spec);
    case Family::CMT: return count_cmt(spec);
    case Family::Sequencer2D: return count_sequencer(spec);
  }
  throw UnsupportedSpec("unknown family");
}

template class VisionTransformer<float>;
template class VisionTransformer<double>;
template std::unique_ptr<Model<float>> build_model(const ArchitectureSpec&, std::uint64_t, BuildOptions);
template std::unique_ptr<Model<double>> build_model(const ArchitectureSpec&, std::uint64_t, BuildOptions);

}  // namespace tilebench::nn
