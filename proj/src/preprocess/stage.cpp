#include "tilebench/preprocess/stage.hpp"

#include <optional>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/parallel.hpp"
#include "tilebench/preprocess/tiling.hpp"

namespace tilebench::preprocess {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSlideFitPixelBudget = 1u << 20;

enum class Verdict { Kept, EdgeReject, StainReject };

// Pools a strided subsample of the given tiles into one column image for a per-slide fit.
Image pool_pixels(const std::vector<Image>& tiles, const std::vector<bool>& use) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (use[i]) total += tiles[i].total();
  }
  const std::size_t step = std::max<std::size_t>(1, (total + kSlideFitPixelBudget - 1) / kSlideFitPixelBudget);
  std::vector<cv::Vec3b> pixels;
  std::size_t k = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (!use[i]) continue;
    for (auto it = tiles[i].begin<cv::Vec3b>(); it != tiles[i].end<cv::Vec3b>(); ++it, ++k) {
      if (k % step == 0) pixels.push_back(*it);
    }
  }
  Image pooled(static_cast<int>(pixels.size()), 1, CV_8UC3);
  for (std::size_t i = 0; i < pixels.size(); ++i) pooled.at<cv::Vec3b>(static_cast<int>(i), 0) = pixels[i];
  return pooled;
}

}  // namespace

StageResult run_preprocess(const CohortManifest& manifest, const PreprocessConfig& cfg, const fs::path& base_dir,
                           const fs::path& out_dir, int threads) {
  cfg.validate();
  fs::create_directories(out_dir);
  StageResult result;
  for (const auto& slide : manifest.slides) {
    fs::path image_path = slide.image_path;
    if (image_path.is_relative()) image_path = base_dir / image_path;
    const Image image = read_rgb(image_path);
    const TileGrid grid = tile_grid(image.cols, image.rows, slide.microns_per_pixel, cfg);
    std::vector<TileRecord> tiles = tessellate(slide, image.cols, image.rows, cfg);

    std::vector<Image> native(tiles.size());
    std::vector<bool> edge_ok(tiles.size(), false);
    parallel_for(tiles.size(), threads, [&](std::size_t i) {
      native[i] = extract_tile(image, tiles[i], grid, cfg);
      const EdgeQc qc = edge_filter(native[i], cfg);
      tiles[i].qc_edge_fraction = qc.edge_fraction;
      edge_ok[i] = qc.qc_pass;
    });

    std::optional<StainProfile> slide_profile;
    bool slide_fit_failed = false;
    if (cfg.stain_fit == StainFitScope::PerSlide) {
      try {
        slide_profile = macenko_fit(pool_pixels(native, edge_ok), cfg);
      } catch (const InsufficientTissue&) {
        slide_fit_failed = true;
      } catch (const DegenerateStains&) {
        slide_fit_failed = true;
      }
    }

    std::vector<Verdict> verdict(tiles.size(), Verdict::EdgeReject);
    parallel_for(tiles.size(), threads, [&](std::size_t i) {
      if (!edge_ok[i]) return;
      if (slide_fit_failed) {
        verdict[i] = Verdict::StainReject;
        return;
      }
      Image normalized;
      try {
        normalized = slide_profile ? macenko_normalize(native[i], *slide_profile, cfg)
                                   : macenko_normalize(native[i], cfg);
      } catch (const InsufficientTissue&) {
        verdict[i] = Verdict::StainReject;
        return;
      } catch (const DegenerateStains&) {
        verdict[i] = Verdict::StainReject;
        return;
      }
      const fs::path path = out_dir / (tiles[i].tile_id() + ".png");
      write_rgb_png(path, resize(normalized, cfg.output_px));
      tiles[i].tile_path = path.filename().string();
      tiles[i].qc_pass = true;
      verdict[i] = Verdict::Kept;
    });

    SlideOutcome outcome{slide.slide_id, tiles.size(), 0, 0, 0};
    for (auto v : verdict) {
      if (v == Verdict::Kept) ++outcome.tiles_kept;
      if (v == Verdict::EdgeReject) ++outcome.rejected_edges;
      if (v == Verdict::StainReject) ++outcome.rejected_stain;
    }
    result.slides.push_back(outcome);
    for (auto& t : tiles) result.tiles.push_back(std::move(t));
  }
  return result;
}

}  // namespace tilebench::preprocess
