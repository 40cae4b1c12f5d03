#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tilebench/core/types.hpp"
#include "tilebench/nn/tensor.hpp"
#include "tilebench/preprocess/image.hpp"

namespace tilebench::train {

struct TileSample {
  std::string tile_id;
  std::string patient_id;
  std::optional<int> label;     // broadcast slide label
  std::vector<std::uint8_t> rgb;  // px * px * 3, row-major HWC
};

// Tiles held as 8-bit pixels; tensors are built per batch.
struct TileDataset {
  int px = 224;
  std::vector<TileSample> samples;

  std::size_t size() const { return samples.size(); }
  std::vector<int> labels() const;  // throws InvariantViolation on unlabeled tiles
  std::map<std::string, std::string> tile_to_patient() const;
  // Subset keeping only tiles of the listed patients (in dataset order).
  TileDataset subset(const std::vector<std::string>& patients) const;
};

void add_sample(TileDataset& ds, std::string tile_id, std::string patient_id, std::optional<int> label,
                const preprocess::Image& image);

// Selected tiles of the manifest's slides, read from tile_path (relative
// paths resolve against tiles_dir) and resized to px when needed. Tiles of
// slides outside the manifest are skipped.
TileDataset load_dataset(const CohortManifest& manifest, const std::vector<TileRecord>& tiles,
                         const std::filesystem::path& tiles_dir, int px);

// (B, 3, px, px) with v -> (v / 255 - 0.5) / 0.25.
template <typename T>
nn::Tensor<T> make_batch(const TileDataset& ds, const std::vector<std::size_t>& indices);

inline constexpr double kInputMean = 0.5;
inline constexpr double kInputStd = 0.25;

}  // namespace tilebench::train
