#include "tilebench/preprocess/tiling.hpp"

#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tilebench/core/errors.hpp"

namespace tilebench::preprocess {

TileGrid tile_grid(int width, int height, double slide_mpp, const PreprocessConfig& cfg) {
  if (!(slide_mpp > 0.0)) throw ResolutionMismatch("slide microns_per_pixel must be positive");
  const double ratio = cfg.target_mpp / slide_mpp;
  if (ratio > 4.0 || ratio < 0.25) {
    throw ResolutionMismatch("slide at " + std::to_string(slide_mpp) + " um/px is more than 4x from target " +
                             std::to_string(cfg.target_mpp));
  }
  TileGrid grid;
  grid.stride = cfg.tile_native_px * ratio;
  // Guard against 1023.9999 style rounding of exact ratios.
  grid.columns = static_cast<int>(std::floor(width / grid.stride + 1e-9));
  grid.rows = static_cast<int>(std::floor(height / grid.stride + 1e-9));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.columns; ++c) {
      grid.origins.emplace_back(static_cast<std::int64_t>(std::floor(c * grid.stride + 1e-9)),
                                static_cast<std::int64_t>(std::floor(r * grid.stride + 1e-9)));
    }
  }
  return grid;
}

std::vector<TileRecord> tessellate(const SlideRecord& slide, int width, int height, const PreprocessConfig& cfg) {
  const TileGrid grid = tile_grid(width, height, slide.microns_per_pixel, cfg);
  std::vector<TileRecord> tiles;
  tiles.reserve(grid.origins.size());
  for (const auto& [x, y] : grid.origins) {
    TileRecord t;
    t.slide_id = slide.slide_id;
    t.x = x;
    t.y = y;
    t.native_size = static_cast<int>(std::lround(grid.stride));
    t.output_size = cfg.output_px;
    tiles.push_back(std::move(t));
  }
  return tiles;
}

std::vector<TileRecord> tessellate(const SlideRecord& slide, const PreprocessConfig& cfg) {
  cv::Mat header = cv::imread(slide.image_path, cv::IMREAD_UNCHANGED);
  if (header.empty()) throw UnreadableImage("cannot decode slide image " + slide.image_path);
  return tessellate(slide, header.cols, header.rows, cfg);
}

Image extract_tile(const Image& slide_image, const TileRecord& record, const TileGrid& grid,
                   const PreprocessConfig& cfg) {
  const auto x1 = static_cast<int>(std::floor((record.x + grid.stride) + 1e-9));
  const auto y1 = static_cast<int>(std::floor((record.y + grid.stride) + 1e-9));
  const cv::Rect roi(static_cast<int>(record.x), static_cast<int>(record.y), x1 - static_cast<int>(record.x),
                     y1 - static_cast<int>(record.y));
  if (roi.x + roi.width > slide_image.cols || roi.y + roi.height > slide_image.rows) {
    throw InvariantViolation("tile " + record.tile_id() + " lies outside the slide");
  }
  const Image region = slide_image(roi);
  if (region.cols == cfg.tile_native_px && region.rows == cfg.tile_native_px) return region.clone();
  Image out;
  cv::resize(region, out, cv::Size(cfg.tile_native_px, cfg.tile_native_px), 0, 0, cv::INTER_LINEAR);
  return out;
}

cv::Mat canny_edges(const Image& tile, const PreprocessConfig& cfg) {
  cv::Mat gray;
  cv::cvtColor(tile, gray, cv::COLOR_RGB2GRAY);
  cv::Mat edges;
  cv::Canny(gray, edges, cfg.canny_low, cfg.canny_high);
  return edges;
}

EdgeQc edge_filter(const Image& tile, const PreprocessConfig& cfg) {
  const cv::Mat edges = canny_edges(tile, cfg);
  EdgeQc qc;
  qc.edge_fraction = static_cast<double>(cv::countNonZero(edges)) / static_cast<double>(tile.total());
  qc.qc_pass = qc.edge_fraction >= cfg.edge_fraction_min;
  return qc;
}

Image resize(const Image& tile, int output_px) {
  if (tile.rows != tile.cols) throw InvariantViolation("resize expects a square tile");
  if (tile.rows == output_px) return tile.clone();
  Image out;
  cv::resize(tile, out, cv::Size(output_px, output_px), 0, 0, cv::INTER_LINEAR);
  return out;
}

}  // namespace tilebench::preprocess
