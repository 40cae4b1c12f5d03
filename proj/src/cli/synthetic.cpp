#include "tilebench/cli/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include <Eigen/Core>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/manifest.hpp"
#include "tilebench/core/rng.hpp"

namespace tilebench::cli {

namespace {

constexpr int kCell = 256;

struct Stains {
  Eigen::Vector3d h{0.65, 0.70, 0.29};
  Eigen::Vector3d e{0.07, 0.99, 0.11};
  double intensity = 1.0;
};

Stains slide_stains(Rng& rng) {
  Stains s;
  for (int c = 0; c < 3; ++c) {
    s.h[c] = std::max(0.02, s.h[c] + 0.06 * (uniform01(rng) - 0.5));
    s.e[c] = std::max(0.02, s.e[c] + 0.06 * (uniform01(rng) - 0.5));
  }
  s.h.normalize();
  s.e.normalize();
  s.intensity = 0.85 + 0.3 * uniform01(rng);
  return s;
}

struct Concentrations {
  std::vector<double> h = std::vector<double>(kCell * kCell, 0.0);
  std::vector<double> e = std::vector<double>(kCell * kCell, 0.0);
};

// Discs at uniform centres until `coverage` of the cell is covered.
void add_nuclei(Concentrations& c, Rng& rng, double coverage, double r_min, double r_max) {
  std::vector<char> covered(kCell * kCell, 0);
  std::size_t count = 0;
  const auto target = static_cast<std::size_t>(coverage * kCell * kCell);
  while (count < target) {
    const double cx = uniform01(rng) * kCell;
    const double cy = uniform01(rng) * kCell;
    const double r = r_min + (r_max - r_min) * uniform01(rng);
    const double stain = 0.75 + 0.2 * uniform01(rng);
    const int x0 = std::max(0, static_cast<int>(cx - r)), x1 = std::min(kCell - 1, static_cast<int>(cx + r));
    const int y0 = std::max(0, static_cast<int>(cy - r)), y1 = std::min(kCell - 1, static_cast<int>(cy + r));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > r * r) continue;
        const int i = y * kCell + x;
        c.h[i] = stain;
        c.e[i] = 0.1;
        if (!covered[i]) {
          covered[i] = 1;
          ++count;
        }
      }
    }
  }
}

preprocess::Image render(const Concentrations& c, const Stains& s, Rng& rng) {
  preprocess::Image img(kCell, kCell, CV_8UC3);
  for (int y = 0; y < kCell; ++y) {
    for (int x = 0; x < kCell; ++x) {
      const int i = y * kCell + x;
      const Eigen::Vector3d od = s.intensity * (s.h * c.h[i] + s.e * c.e[i]);
      auto& px = img.at<cv::Vec3b>(y, x);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = 255.0 * std::pow(10.0, -od[ch]) - 1.0 + 3.0 * (uniform01(rng) - 0.5);
        px[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

}  // namespace

preprocess::Image synthetic_cell(SyntheticTissue kind, int label, std::uint64_t stain_seed, std::uint64_t texture_seed) {
  Rng stain_rng(stain_seed);
  const Stains stains = slide_stains(stain_rng);
  Rng draw(texture_seed);
  Concentrations c;
  switch (kind) {
    case SyntheticTissue::Glass:
      break;
    case SyntheticTissue::Tumor:
      for (std::size_t i = 0; i < c.e.size(); ++i) {
        c.e[i] = 0.25 + 0.08 * uniform01(draw);
        c.h[i] = 0.03;
      }
      if (label) {
        add_nuclei(c, draw, 0.40, 8.0, 10.0);
      } else {
        add_nuclei(c, draw, 0.20, 3.0, 4.0);
      }
      break;
    case SyntheticTissue::Stroma: {
      const double angle = uniform01(draw) * 3.14159265358979;
      for (int y = 0; y < kCell; ++y) {
        for (int x = 0; x < kCell; ++x) {
          const double t = x * std::cos(angle) + y * std::sin(angle);
          const int i = y * kCell + x;
          c.e[i] = std::fmod(std::abs(t), 10.0) < 5.0 ? 0.55 : 0.2;
          c.h[i] = 0.03;
        }
      }
      add_nuclei(c, draw, 0.03, 2.5, 3.0);
      break;
    }
  }
  return render(c, stains, draw);
}

CohortManifest write_synthetic_cohort(const std::filesystem::path& dir, const SyntheticCohortOptions& opt) {
  if (opt.patients < 2) throw ConfigError("synthetic cohort needs at least 2 patients");
  if (!(opt.positive_fraction > 0.0 && opt.positive_fraction < 1.0)) throw ConfigError("positive_fraction must be in (0, 1)");
  if (opt.tumor_tiles < 1 || opt.tumor_tiles > 5) throw ConfigError("tumor_tiles must be in [1, 5]");
  std::filesystem::create_directories(dir / "slides");
  const int positives = std::clamp(static_cast<int>(std::lround(opt.patients * opt.positive_fraction)), 1,
                                   opt.patients - 1);
  std::vector<int> labels(static_cast<std::size_t>(opt.patients), 0);
  std::fill(labels.begin(), labels.begin() + positives, 1);
  Rng rng(mix_seed(opt.seed, "labels"));
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(rng, i)]);

  CohortManifest manifest;
  manifest.task = opt.task;
  manifest.split_role = SplitRole::Train;
  for (int p = 0; p < opt.patients; ++p) {
    char id[16];
    std::snprintf(id, sizeof id, "%03d", p + 1);
    SlideRecord slide;
    slide.patient_id = std::string("P") + id;
    slide.slide_id = std::string("S") + id;
    slide.cohort = "synthetic";
    slide.image_path = "slides/" + slide.slide_id + ".png";
    slide.microns_per_pixel = 1.0;
    slide.labels[opt.task] = labels[static_cast<std::size_t>(p)];

    const std::uint64_t slide_seed = mix_seed(opt.seed, slide.slide_id);
    std::array<SyntheticTissue, 6> layout{};
    layout.fill(SyntheticTissue::Glass);
    for (int i = 0; i < opt.tumor_tiles; ++i) layout[static_cast<std::size_t>(i)] = SyntheticTissue::Tumor;
    layout[static_cast<std::size_t>(opt.tumor_tiles)] = SyntheticTissue::Stroma;
    Rng place(mix_seed(slide_seed, "layout"));
    for (std::size_t i = layout.size(); i > 1; --i) std::swap(layout[i - 1], layout[uniform_index(place, i)]);

    preprocess::Image image(2 * kCell, 3 * kCell, CV_8UC3);
    for (int cell = 0; cell < 6; ++cell) {
      const auto tile = synthetic_cell(layout[static_cast<std::size_t>(cell)], slide.labels[opt.task], slide_seed,
                                       mix_seed(slide_seed, static_cast<std::uint64_t>(cell)));
      tile.copyTo(image(cv::Rect((cell % 3) * kCell, (cell / 3) * kCell, kCell, kCell)));
    }
    preprocess::write_rgb_png(dir / slide.image_path, image);
    manifest.slides.push_back(std::move(slide));
  }
  save_manifest(dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace tilebench::cli
