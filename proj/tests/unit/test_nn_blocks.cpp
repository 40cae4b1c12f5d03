#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "block_cases.hpp"
#include "support.hpp"
#include "tilebench/nn/blocks.hpp"
#include "tilebench/nn/models.hpp"

using namespace tilebench;
using namespace tilebench::nn;
using tbtest::DTensor;
using tbtest::random_tensor;

TEST_SUITE("nn_blocks") {

TEST_CASE("block gradients match central differences") {
  for (const auto& c : tbtest::block_cases()) {
    for (std::uint64_t draw = 0; draw < 2; ++draw) {
      const auto r = c.run(mix_seed(draw, c.name));
      INFO(c.name << " draw " << draw << " rel error " << r.rel_error);
      CHECK(r.probed > 0);
      CHECK(r.rel_error < 1e-4);
    }
  }
}

TEST_CASE("window partition and merge are inverse") {
  Rng rng(1);
  const auto x = random_tensor({2, 8, 12, 3}, rng);
  const auto w = window_partition(x, 4);
  CHECK(w.shape() == Shape{2 * 6, 16, 3});
  // window 1 of image 0 covers rows 0..3, columns 4..7
  CHECK(w.values()[(1 * 16 + 5) * 3 + 2] == x.values()[((0 * 8 + 1) * 12 + 5) * 3 + 2]);
  const auto back = window_merge(w, 4, 2, 8, 12);
  CHECK(back.values() == x.values());
}

TEST_CASE("cyclic shift follows the index rule and undoes itself") {
  Rng rng(2);
  const auto x = random_tensor({1, 5, 6, 2}, rng);
  const auto s = cyclic_shift(x, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j)
      for (int c = 0; c < 2; ++c)
        CHECK(s.values()[(i * 6 + j) * 2 + c] == x.values()[(((i + 2) % 5) * 6 + (j + 2) % 6) * 2 + c]);
  CHECK(cyclic_shift(s, -2).values() == x.values());
}

TEST_CASE("shifted window mask blocks cross-region pairs") {
  const auto m = shifted_window_mask<double>(8, 8, 4, 2);
  CHECK(m.shape() == Shape{4, 16, 16});
  // window 0 holds one region only
  for (int i = 0; i < 256; ++i) CHECK(m.values()[i] == 0.0);
  // last window: token (0,0) and token (3,3) come from different regions
  const auto last = 3 * 256;
  CHECK(m.values()[last + 0 * 16 + 15] == -100.0);
  CHECK(m.values()[last + 0 * 16 + 1] == 0.0);
  const auto none = shifted_window_mask<double>(8, 8, 4, 0);
  CHECK(std::all_of(none.values().begin(), none.values().end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("relative position index") {
  const auto idx = relative_position_index(3);
  CHECK(idx.size() == 81);
  // same position -> centre of the 5 x 5 table
  for (int i = 0; i < 9; ++i) CHECK(idx[i * 9 + i] == 12);
  CHECK(*std::max_element(idx.begin(), idx.end()) == 24);
  CHECK(*std::min_element(idx.begin(), idx.end()) == 0);
}

TEST_CASE("mobilevit unfold and fold are inverse") {
  Rng rng(3);
  const auto x = random_tensor({2, 5, 8, 6}, rng);
  const auto seq = unfold_patches(x, 2);
  CHECK(seq.shape() == Shape{2 * 4, 12, 5});
  CHECK(fold_patches(seq, 2, 2, 8, 6).values() == x.values());
}

TEST_CASE("attention is permutation equivariant without position embeddings") {
  Rng rng(4);
  TransformerBlock<double> block(8, 2, 16, Act::GELU, rng);
  const auto x = random_tensor({1, 6, 8}, rng);
  std::vector<std::int64_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<std::int64_t> index;
  for (auto p : perm)
    for (int c = 0; c < 8; ++c) index.push_back(p * 8 + c);
  const auto xp = ops::gather(x, {1, 6, 8}, index);
  const auto y = block.forward(x);
  const auto yp = block.forward(xp);
  for (std::size_t i = 0; i < index.size(); ++i) CHECK(yp.values()[i] == doctest::Approx(y.values()[index[i]]).epsilon(1e-9));

  auto vit = build_model<double>(toy_spec(Family::ViT), 3);
  auto& v = dynamic_cast<VisionTransformer<double>&>(*vit);
  v.set_training(false);
  const auto dim = v.cls_token.dim(2);
  const auto patches = random_tensor({1, 5, dim}, rng);
  std::vector<std::int64_t> pidx;
  const std::vector<std::int64_t> pp{4, 2, 0, 3, 1};
  for (auto p : pp)
    for (std::int64_t c = 0; c < dim; ++c) pidx.push_back(p * dim + c);
  const auto a = v.encode(v.with_class_token(patches));
  const auto b = v.encode(v.with_class_token(ops::gather(patches, {1, 5, dim}, pidx)));
  for (std::int64_t c = 0; c < dim; ++c) CHECK(std::abs(a.values()[c] - b.values()[c]) < 1e-6);
  for (std::size_t i = 0; i < pidx.size(); ++i)
    CHECK(std::abs(b.values()[dim + i] - a.values()[dim + pidx[i]]) < 1e-6);
}

TEST_CASE("swin attention stays inside windows") {
  Rng rng(5);
  SwinBlock<double> b(8, 2, 4, 2, 16, rng);
  b.forward(random_tensor({1, 64, 8}, rng), 8, 8);
  CHECK(b.score_entries_per_token() == 16);
}

TEST_CASE("inverted residual keeps the identity path only when shapes allow") {
  Rng rng(6);
  InvertedResidual<double>::Options o;
  CHECK(InvertedResidual<double>(8, 8, o, rng).has_residual());
  o.stride = 2;
  CHECK(!InvertedResidual<double>(8, 8, o, rng).has_residual());
  o.stride = 1;
  CHECK(!InvertedResidual<double>(8, 12, o, rng).has_residual());
}

}  // TEST_SUITE
