#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tilebench/core/types.hpp"
#include "tilebench/preprocess/config.hpp"

namespace tilebench::preprocess {

struct SlideOutcome {
  std::string slide_id;
  std::size_t tiles_total = 0;
  std::size_t tiles_kept = 0;
  std::size_t rejected_edges = 0;
  std::size_t rejected_stain = 0;
};

struct StageResult {
  std::vector<TileRecord> tiles;  // every grid cell, qc_pass marks the written ones
  std::vector<SlideOutcome> slides;
};

// Tessellate, edge-filter, stain-normalize and resize every slide; tiles that
// pass QC are written as <out_dir>/<slide_id>_<x>_<y>.png and tile_path holds
// the file name relative to out_dir. Output is keyed by
// tile coordinates and is identical for any thread count.
StageResult run_preprocess(const CohortManifest& manifest, const PreprocessConfig& cfg,
                           const std::filesystem::path& base_dir, const std::filesystem::path& out_dir,
                           int threads);

}  // namespace tilebench::preprocess
