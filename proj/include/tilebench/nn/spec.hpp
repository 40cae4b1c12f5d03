#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tilebench/core/config.hpp"

namespace tilebench::nn {

enum class Family { ResNet18, ResNet50, MobileNetV2, EfficientNet, ViT, SwinT, MobileViT, CMT, Sequencer2D };
enum class Scale { Toy, Reference };

inline constexpr std::array<Family, 9> kAllFamilies{Family::ResNet18,  Family::ResNet50,  Family::MobileNetV2,
                                                    Family::EfficientNet, Family::ViT,   Family::SwinT,
                                                    Family::MobileViT, Family::CMT,       Family::Sequencer2D};

std::string family_key(Family f);      // "resnet18", "swin_t", ...
std::string family_display(Family f);  // "ResNet18", "Swin-T", ...
Family parse_family(std::string_view text);
std::string scale_name(Scale s);
Scale parse_scale(std::string_view text);

// Stage-wise hyperparameters. Which lists a family reads:
//   ResNet18/50   stem_width, widths, depths, strides
//   MobileNetV2   stem_width, widths, depths, strides, expand_ratios, head_width
//   EfficientNet  the MobileNetV2 set plus kernels
//   ViT           patch, widths[0] (embed dim), depths[0], heads[0], mlp_ratio
//   SwinT         patch, window, widths, depths, heads, mlp_ratio
//   MobileViT     stem_width, widths, depths (inverted residuals per stage), strides,
//                 expand_ratios, hidden_dims (transformer width, 0 = none),
//                 attn_depths, heads, patch, mlp_ratio, head_width
//   CMT           stem_width, widths, depths, heads, reductions, mlp_ratio, head_width
//   Sequencer2D   patch_sizes, widths, hidden_dims, depths, mlp_ratio
struct ArchitectureSpec {
  Family family = Family::ResNet18;
  Scale scale = Scale::Toy;
  int num_classes = 2;
  int input_px = 224;

  int stem_width = 0;
  std::vector<int> widths;
  std::vector<int> depths;
  std::vector<int> strides;
  std::vector<int> expand_ratios;
  std::vector<int> kernels;
  std::vector<int> heads;
  std::vector<int> hidden_dims;
  std::vector<int> attn_depths;
  std::vector<int> patch_sizes;
  std::vector<int> reductions;
  int patch = 0;
  int window = 0;
  int mlp_ratio = 4;
  int head_width = 0;

  // Throws UnsupportedSpec when lists are missing or inconsistent.
  void validate() const;

  // Section "model".
  static ArchitectureSpec from_config(const KeyValueConfig& cfg);
  KeyValueConfig to_config() const;

  bool operator==(const ArchitectureSpec&) const = default;
};

ArchitectureSpec reference_spec(Family f, int num_classes = 2);
ArchitectureSpec toy_spec(Family f, int num_classes = 2);

}  // namespace tilebench::nn
