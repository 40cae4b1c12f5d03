#include "tilebench/nn/spec.hpp"

#include "tilebench/core/errors.hpp"

namespace tilebench::nn {

std::string family_key(Family f) {
  switch (f) {
    case Family::ResNet18: return "resnet18";
    case Family::ResNet50: return "resnet50";
    case Family::MobileNetV2: return "mobilenet_v2";
    case Family::EfficientNet: return "efficientnet";
    case Family::ViT: return "vit";
    case Family::SwinT: return "swin_t";
    case Family::MobileViT: return "mobilevit";
    case Family::CMT: return "cmt";
    case Family::Sequencer2D: return "sequencer2d";
  }
  return "?";
}

std::string family_display(Family f) {
  switch (f) {
    case Family::ResNet18: return "ResNet18";
    case Family::ResNet50: return "ResNet50";
    case Family::MobileNetV2: return "MobileNetV2";
    case Family::EfficientNet: return "EfficientNet";
    case Family::ViT: return "ViT";
    case Family::SwinT: return "Swin-T";
    case Family::MobileViT: return "MobileViT";
    case Family::CMT: return "CMT";
    case Family::Sequencer2D: return "Sequencer2D";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  for (Family f : kAllFamilies) {
    if (text == family_key(f) || text == family_display(f)) return f;
  }
  throw UnsupportedSpec("unknown model family '" + std::string(text) + "'");
}

std::string scale_name(Scale s) { return s == Scale::Toy ? "toy" : "reference"; }

Scale parse_scale(std::string_view text) {
  if (text == "toy") return Scale::Toy;
  if (text == "reference") return Scale::Reference;
  throw UnsupportedSpec("unknown scale '" + std::string(text) + "'");
}

ArchitectureSpec reference_spec(Family f, int num_classes) {
  ArchitectureSpec s;
  s.family = f;
  s.scale = Scale::Reference;
  s.num_classes = num_classes;
  switch (f) {
    case Family::ResNet18:
    case Family::ResNet50:
      s.stem_width = 64;
      s.widths = {64, 128, 256, 512};
      s.depths = f == Family::ResNet18 ? std::vector<int>{2, 2, 2, 2} : std::vector<int>{3, 4, 6, 3};
      s.strides = {1, 2, 2, 2};
      break;
    case Family::MobileNetV2:
      s.stem_width = 32;
      s.expand_ratios = {1, 6, 6, 6, 6, 6, 6};
      s.widths = {16, 24, 32, 64, 96, 160, 320};
      s.depths = {1, 2, 3, 4, 3, 3, 1};
      s.strides = {1, 2, 2, 2, 1, 2, 1};
      s.kernels = {3, 3, 3, 3, 3, 3, 3};
      s.head_width = 1280;
      break;
    case Family::EfficientNet:  // B0
      s.stem_width = 32;
      s.expand_ratios = {1, 6, 6, 6, 6, 6, 6};
      s.kernels = {3, 3, 5, 3, 5, 5, 3};
      s.widths = {16, 24, 40, 80, 112, 192, 320};
      s.depths = {1, 2, 2, 3, 3, 4, 1};
      s.strides = {1, 2, 2, 2, 1, 2, 1};
      s.head_width = 1280;
      break;
    case Family::ViT:  // B/16
      s.patch = 16;
      s.widths = {768};
      s.depths = {12};
      s.heads = {12};
      s.mlp_ratio = 4;
      break;
    case Family::SwinT:  // "S" layout: depths 2-2-18-2
      s.patch = 4;
      s.window = 7;
      s.widths = {96, 192, 384, 768};
      s.depths = {2, 2, 18, 2};
      s.heads = {3, 6, 12, 24};
      s.mlp_ratio = 4;
      break;
    case Family::MobileViT:  // S
      s.input_px = 256;
      s.stem_width = 16;
      s.widths = {32, 64, 96, 128, 160};
      s.depths = {1, 3, 1, 1, 1};
      s.strides = {1, 2, 2, 2, 2};
      s.expand_ratios = {4, 4, 4, 4, 4};
      s.hidden_dims = {0, 0, 144, 192, 240};
      s.attn_depths = {0, 0, 2, 4, 3};
      s.heads = {0, 0, 4, 4, 4};
      s.patch = 2;
      s.mlp_ratio = 2;
      s.head_width = 640;
      break;
    case Family::CMT:  // S
      s.stem_width = 32;
      s.widths = {64, 128, 256, 512};
      s.depths = {3, 3, 16, 3};
      s.heads = {1, 2, 4, 8};
      s.reductions = {8, 4, 2, 1};
      s.mlp_ratio = 4;
      s.head_width = 1280;
      break;
    case Family::Sequencer2D:  // S
      s.patch_sizes = {7, 2, 1, 1};
      s.widths = {192, 384, 384, 384};
      s.hidden_dims = {48, 96, 96, 96};
      s.depths = {4, 3, 8, 3};
      s.mlp_ratio = 3;
      break;
  }
  return s;
}

ArchitectureSpec toy_spec(Family f, int num_classes) {
  ArchitectureSpec s;
  s.family = f;
  s.scale = Scale::Toy;
  s.num_classes = num_classes;
  switch (f) {
    case Family::ResNet18:
      s.stem_width = 8;
      s.widths = {8, 16};
      s.depths = {2, 2};
      s.strides = {1, 2};
      break;
    case Family::ResNet50:
      s.stem_width = 8;
      s.widths = {4, 8};
      s.depths = {1, 1};
      s.strides = {1, 2};
      break;
    case Family::MobileNetV2:
    case Family::EfficientNet:
      s.stem_width = 8;
      s.expand_ratios = {1, 4};
      s.widths = {8, 16};
      s.depths = {1, 2};
      s.strides = {1, 2};
      s.kernels = f == Family::EfficientNet ? std::vector<int>{3, 5} : std::vector<int>{3, 3};
      s.head_width = 32;
      break;
    case Family::ViT:
      s.patch = 16;
      s.widths = {32};
      s.depths = {2};
      s.heads = {2};
      s.mlp_ratio = 2;
      break;
    case Family::SwinT:
      s.patch = 4;
      s.window = 7;
      s.widths = {16, 32};
      s.depths = {2, 2};
      s.heads = {1, 2};
      s.mlp_ratio = 2;
      break;
    case Family::MobileViT:
      s.input_px = 256;
      s.stem_width = 8;
      s.widths = {16, 24};
      s.depths = {1, 1};
      s.strides = {2, 2};
      s.expand_ratios = {2, 2};
      s.hidden_dims = {0, 32};
      s.attn_depths = {0, 1};
      s.heads = {0, 2};
      s.patch = 2;
      s.mlp_ratio = 2;
      s.head_width = 64;
      break;
    case Family::CMT:
      s.stem_width = 8;
      s.widths = {16, 32};
      s.depths = {1, 1};
      s.heads = {1, 2};
      s.reductions = {8, 4};
      s.mlp_ratio = 2;
      s.head_width = 64;
      break;
    case Family::Sequencer2D:
      s.patch_sizes = {7, 2};
      s.widths = {16, 32};
      s.hidden_dims = {4, 8};
      s.depths = {1, 1};
      s.mlp_ratio = 2;
      break;
  }
  return s;
}

namespace {

void require(bool ok, const ArchitectureSpec& s, const std::string& what) {
  if (!ok) throw UnsupportedSpec(family_key(s.family) + ": " + what);
}

void require_len(const ArchitectureSpec& s, const std::vector<int>& v, std::size_t n, const char* name) {
  require(v.size() == n, s, std::string(name) + " needs " + std::to_string(n) + " entries");
}

void require_positive(const ArchitectureSpec& s, const std::vector<int>& v, const char* name) {
  for (int x : v) require(x > 0, s, std::string(name) + " entries must be positive");
}

}  // namespace

void ArchitectureSpec::validate() const {
  const auto& s = *this;
  require(num_classes >= 2, s, "num_classes must be >= 2");
  require(input_px > 0, s, "input_px must be positive");
  require(mlp_ratio > 0, s, "mlp_ratio must be positive");
  const std::size_t n = widths.size();
  require(n > 0, s, "widths is empty");
  require_positive(s, widths, "widths");
  require_len(s, depths, n, "depths");
  require_positive(s, depths, "depths");
  switch (family) {
    case Family::ResNet18:
    case Family::ResNet50:
      require(stem_width > 0, s, "stem_width must be positive");
      require_len(s, strides, n, "strides");
      break;
    case Family::MobileNetV2:
    case Family::EfficientNet:
      require(stem_width > 0 && head_width > 0, s, "stem_width and head_width must be positive");
      require_len(s, strides, n, "strides");
      require_len(s, expand_ratios, n, "expand_ratios");
      require_len(s, kernels, n, "kernels");
      require_positive(s, expand_ratios, "expand_ratios");
      for (int k : kernels) require(k > 0 && k % 2 == 1, s, "kernels must be odd");
      break;
    case Family::ViT:
      require(n == 1, s, "ViT takes a single width");
      require_len(s, heads, 1, "heads");
      require(patch > 0 && input_px % patch == 0, s, "input_px must be divisible by patch");
      require(widths[0] % heads[0] == 0, s, "width must be divisible by heads");
      break;
    case Family::SwinT: {
      require_len(s, heads, n, "heads");
      require(patch > 0 && window > 0 && input_px % patch == 0, s, "input_px must be divisible by patch");
      int res = input_px / patch;
      for (std::size_t i = 0; i < n; ++i) {
        require(widths[i] % heads[i] == 0, s, "widths must be divisible by heads");
        const int w = std::min(window, res);
        require(res % w == 0, s, "stage resolution must be divisible by the window");
        if (i + 1 < n) {
          require(res % 2 == 0, s, "odd resolution before patch merging");
          res /= 2;
        }
      }
      break;
    }
    case Family::MobileViT:
      require(stem_width > 0 && head_width > 0 && patch > 0, s, "stem_width, head_width, patch must be positive");
      require_len(s, strides, n, "strides");
      require_len(s, expand_ratios, n, "expand_ratios");
      require_len(s, hidden_dims, n, "hidden_dims");
      require_len(s, attn_depths, n, "attn_depths");
      require_len(s, heads, n, "heads");
      for (std::size_t i = 0; i < n; ++i) {
        if (hidden_dims[i] > 0) {
          require(attn_depths[i] > 0 && heads[i] > 0 && hidden_dims[i] % heads[i] == 0, s,
                  "transformer stages need depth and heads dividing the width");
        }
      }
      break;
    case Family::CMT:
      require(stem_width > 0 && head_width > 0, s, "stem_width and head_width must be positive");
      require_len(s, heads, n, "heads");
      require_len(s, reductions, n, "reductions");
      require_positive(s, reductions, "reductions");
      for (std::size_t i = 0; i < n; ++i) require(widths[i] % heads[i] == 0, s, "widths must be divisible by heads");
      break;
    case Family::Sequencer2D:
      require_len(s, patch_sizes, n, "patch_sizes");
      require_len(s, hidden_dims, n, "hidden_dims");
      require_positive(s, patch_sizes, "patch_sizes");
      require_positive(s, hidden_dims, "hidden_dims");
      break;
  }
}

ArchitectureSpec ArchitectureSpec::from_config(const KeyValueConfig& cfg) {
  const Family f = parse_family(cfg.get_string("model.family", "resnet18"));
  const Scale sc = parse_scale(cfg.get_string("model.scale", "toy"));
  const int classes = static_cast<int>(cfg.get_int("model.num_classes", 2));
  ArchitectureSpec s = sc == Scale::Toy ? toy_spec(f, classes) : reference_spec(f, classes);
  auto ints = [&](const char* key, std::vector<int>& v) { v = cfg.get_ints(std::string("model.") + key, v); };
  auto one = [&](const char* key, int& v) { v = static_cast<int>(cfg.get_int(std::string("model.") + key, v)); };
  one("input_px", s.input_px);
  one("stem_width", s.stem_width);
  ints("widths", s.widths);
  ints("depths", s.depths);
  ints("strides", s.strides);
  ints("expand_ratios", s.expand_ratios);
  ints("kernels", s.kernels);
  ints("heads", s.heads);
  ints("hidden_dims", s.hidden_dims);
  ints("attn_depths", s.attn_depths);
  ints("patch_sizes", s.patch_sizes);
  ints("reductions", s.reductions);
  one("patch", s.patch);
  one("window", s.window);
  one("mlp_ratio", s.mlp_ratio);
  one("head_width", s.head_width);
  s.validate();
  return s;
}

KeyValueConfig ArchitectureSpec::to_config() const {
  KeyValueConfig c;
  c.set("model.family", family_key(family));
  c.set("model.scale", scale_name(scale));
  c.set("model.num_classes", num_classes);
  c.set("model.input_px", input_px);
  auto put = [&](const char* key, const std::vector<int>& v) {
    if (!v.empty()) c.set(std::string("model.") + key, v);
  };
  auto put1 = [&](const char* key, int v) {
    if (v != 0) c.set(std::string("model.") + key, v);
  };
  put1("stem_width", stem_width);
  put("widths", widths);
  put("depths", depths);
  put("strides", strides);
  put("expand_ratios", expand_ratios);
  put("kernels", kernels);
  put("heads", heads);
  put("hidden_dims", hidden_dims);
  put("attn_depths", attn_depths);
  put("patch_sizes", patch_sizes);
  put("reductions", reductions);
  put1("patch", patch);
  put1("window", window);
  c.set("model.mlp_ratio", mlp_ratio);
  put1("head_width", head_width);
  return c;
}

}  // namespace tilebench::nn
