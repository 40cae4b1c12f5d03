#pragma once

#include <functional>
#include <string>
#include <vector>

#include "support.hpp"
#include "tilebench/nn/blocks.hpp"

namespace tbtest {

struct BlockCase {
  std::string name;
  // Builds the block and its inputs from `seed` and returns the check.
  std::function<GradCheck(std::uint64_t seed)> run;
};

namespace detail {

using namespace tilebench::nn;

template <typename M>
std::vector<DTensor> with_params(const M& m, std::vector<DTensor> extra) {
  for (auto& p : m.parameters()) extra.push_back(p);
  return extra;
}

// Block -> (B, ...) output; loss = <out, R>.
template <typename M, typename Fwd>
GradCheck check_block(M& block, DTensor x, Fwd&& fwd, Rng& rng, std::vector<DTensor> extra = {}) {
  DTensor probe = fwd(x);
  const DTensor r = random_tensor(probe.shape(), rng);
  extra.insert(extra.begin(), x);
  return gradcheck(with_params(block, extra), [&] { return project(fwd(x), r); }, rng);
}

}  // namespace detail

inline std::vector<BlockCase> block_cases() {
  using namespace tilebench::nn;
  using detail::check_block;
  std::vector<BlockCase> cases;

  cases.push_back({"residual basic", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ResidualBlock<double> b(4, 4, 1, false, rng);
                     return check_block(b, random_tensor({2, 4, 6, 6}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"residual bottleneck stride 2", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ResidualBlock<double> b(6, 3, 2, true, rng);
                     return check_block(b, random_tensor({2, 6, 6, 6}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"inverted residual", [](std::uint64_t seed) {
                     Rng rng(seed);
                     InvertedResidual<double>::Options o;
                     o.expand_ratio = 4;
                     InvertedResidual<double> b(6, 6, o, rng);
                     return check_block(b, random_tensor({2, 6, 5, 5}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"mbconv", [](std::uint64_t seed) {
                     Rng rng(seed);
                     InvertedResidual<double>::Options o;
                     o.expand_ratio = 4;
                     o.kernel = 5;
                     o.stride = 2;
                     o.act = Act::SiLU;
                     o.se_squeeze = 2;
                     InvertedResidual<double> b(6, 8, o, rng);
                     return check_block(b, random_tensor({2, 6, 6, 6}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"vit attention stack", [](std::uint64_t seed) {
                     Rng rng(seed);
                     struct Stack : Module<double> {
                       std::shared_ptr<TransformerBlock<double>> a, b;
                       explicit Stack(Rng& r) {
                         a = this->add_module("a", std::make_shared<TransformerBlock<double>>(8, 2, 16, Act::GELU, r));
                         b = this->add_module("b", std::make_shared<TransformerBlock<double>>(8, 2, 16, Act::GELU, r));
                       }
                     } s(rng);
                     return check_block(s, random_tensor({2, 5, 8}, rng),
                                        [&](const DTensor& x) { return s.b->forward(s.a->forward(x)); }, rng);
                   }});
  cases.push_back({"swin windowed", [](std::uint64_t seed) {
                     Rng rng(seed);
                     SwinBlock<double> b(8, 2, 4, 0, 16, rng);
                     return check_block(b, random_tensor({1, 64, 8}, rng),
                                        [&](const DTensor& x) { return b.forward(x, 8, 8); }, rng);
                   }});
  cases.push_back({"swin shifted", [](std::uint64_t seed) {
                     Rng rng(seed);
                     SwinBlock<double> b(8, 2, 4, 2, 16, rng);
                     return check_block(b, random_tensor({1, 64, 8}, rng),
                                        [&](const DTensor& x) { return b.forward(x, 8, 8); }, rng);
                   }});
  cases.push_back({"swin patch merging", [](std::uint64_t seed) {
                     Rng rng(seed);
                     PatchMerging<double> b(4, 8, rng);
                     return check_block(b, random_tensor({2, 16, 4}, rng),
                                        [&](const DTensor& x) { return b.forward(x, 4, 4); }, rng);
                   }});
  cases.push_back({"bilstm2d", [](std::uint64_t seed) {
                     Rng rng(seed);
                     BiLSTM2D<double> b(4, 3, 4, rng);
                     return check_block(b, random_tensor({2, 3, 4, 4}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"sequencer block", [](std::uint64_t seed) {
                     Rng rng(seed);
                     SequencerBlock<double> b(4, 3, 8, rng);
                     return check_block(b, random_tensor({1, 3, 3, 4}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"mobilevit block", [](std::uint64_t seed) {
                     Rng rng(seed);
                     MobileViTBlock<double> b(4, 8, 1, 2, 16, 2, rng);
                     return check_block(b, random_tensor({2, 4, 4, 4}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"cmt stem", [](std::uint64_t seed) {
                     Rng rng(seed);
                     CmtStem<double> b(3, 4, rng);
                     return check_block(b, random_tensor({2, 3, 6, 6}, rng), [&](const DTensor& x) { return b.forward(x); }, rng);
                   }});
  cases.push_back({"cmt block", [](std::uint64_t seed) {
                     Rng rng(seed);
                     CmtBlock<double> b(8, 2, 2, 2, rng);
                     // 4 x 4 map, keys reduced to 2 x 2: bias (heads, 16, 4)
                     DTensor rel = random_tensor({2, 16, 4}, rng, 0.1);
                     return check_block(b, random_tensor({2, 8, 4, 4}, rng),
                                        [&](const DTensor& x) { return b.forward(x, rel); }, rng, {rel});
                   }});
  return cases;
}

}  // namespace tbtest
