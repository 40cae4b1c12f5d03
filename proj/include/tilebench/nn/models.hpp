#pragma once

#include <memory>

#include "tilebench/nn/blocks.hpp"
#include "tilebench/nn/spec.hpp"

namespace tilebench::nn {

// Image classifier: (B, 3, input_px, input_px) -> (B, num_classes) logits.
template <typename T>
class Model : public Module<T> {
 public:
  explicit Model(ArchitectureSpec spec) : spec_(std::move(spec)) {}
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  const ArchitectureSpec& spec() const { return spec_; }

 private:
  ArchitectureSpec spec_;
};

// Exposed for the token-permutation property: the encoder can be driven
// directly with a token sequence.
template <typename T>
class VisionTransformer : public Model<T> {
 public:
  VisionTransformer(const ArchitectureSpec& spec, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) override;
  // (B, 3, H, W) -> (B, N, C) patch tokens, no class token or position.
  Tensor<T> embed_patches(const Tensor<T>& x);
  // Prepends the class token: (B, N, C) -> (B, N + 1, C).
  Tensor<T> with_class_token(const Tensor<T>& patches);
  // Blocks and final norm over (B, N + 1, C); no position embedding added.
  Tensor<T> encode(const Tensor<T>& tokens);
  Tensor<T> head(const Tensor<T>& encoded);

  Tensor<T> cls_token;
  Tensor<T> pos_embed;

 private:
  std::shared_ptr<Conv2d<T>> patch_embed_;
  std::vector<std::shared_ptr<TransformerBlock<T>>> blocks_;
  std::shared_ptr<LayerNorm<T>> norm_;
  std::shared_ptr<Linear<T>> head_;
};

struct BuildOptions {
  // Reference specs are count-only; building one (tests only) must be explicit.
  bool allow_reference = false;
};

// Weights drawn from a generator seeded with `seed`.
template <typename T>
std::unique_ptr<Model<T>> build_model(const ArchitectureSpec& spec, std::uint64_t seed, BuildOptions opt = {});

// Weights + biases + norm affine terms + learned tokens/tables, computed from
// the spec alone.
std::int64_t count_parameters(const ArchitectureSpec& spec);

}  // namespace tilebench::nn
