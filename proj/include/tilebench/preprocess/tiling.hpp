#pragma once

#include <utility>
#include <vector>

#include "tilebench/core/types.hpp"
#include "tilebench/preprocess/config.hpp"
#include "tilebench/preprocess/image.hpp"

namespace tilebench::preprocess {

struct TileGrid {
  double stride = 0;  // native pixels per tile edge
  int columns = 0;
  int rows = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> origins;  // row-major (x, y)
};

// Grid geometry only; throws ResolutionMismatch when the slide resolution is
// more than 4x away from the target.
TileGrid tile_grid(int width, int height, double slide_mpp, const PreprocessConfig& cfg);

// Tile records for every full cell of the slide image (partial border cells dropped).
std::vector<TileRecord> tessellate(const SlideRecord& slide, const PreprocessConfig& cfg);
std::vector<TileRecord> tessellate(const SlideRecord& slide, int width, int height,
                                   const PreprocessConfig& cfg);

// Native region of `record`, resampled to tile_native_px at target_mpp.
Image extract_tile(const Image& slide_image, const TileRecord& record, const TileGrid& grid,
                   const PreprocessConfig& cfg);

struct EdgeQc {
  bool qc_pass = false;
  double edge_fraction = 0.0;
};

// Fraction of Canny edge pixels on the grayscale tile.
EdgeQc edge_filter(const Image& tile, const PreprocessConfig& cfg);
// Edge map (255 = edge) used by edge_filter.
cv::Mat canny_edges(const Image& tile, const PreprocessConfig& cfg);

// Bilinear resample to output_px x output_px; same-size input is returned unchanged.
Image resize(const Image& tile, int output_px);

}  // namespace tilebench::preprocess
