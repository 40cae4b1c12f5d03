#include "tilebench/train/dataset.hpp"

#include <algorithm>
#include <set>

#include "tilebench/core/errors.hpp"
#include "tilebench/preprocess/tiling.hpp"

namespace tilebench::train {

std::vector<int> TileDataset::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.label) throw InvariantViolation("tile " + s.tile_id + " is unlabeled");
    out.push_back(*s.label);
  }
  return out;
}

std::map<std::string, std::string> TileDataset::tile_to_patient() const {
  std::map<std::string, std::string> out;
  for (const auto& s : samples) out[s.tile_id] = s.patient_id;
  return out;
}

TileDataset TileDataset::subset(const std::vector<std::string>& patients) const {
  const std::set<std::string> keep(patients.begin(), patients.end());
  TileDataset out;
  out.px = px;
  for (const auto& s : samples) {
    if (keep.count(s.patient_id)) out.samples.push_back(s);
  }
  return out;
}

void add_sample(TileDataset& ds, std::string tile_id, std::string patient_id, std::optional<int> label,
                const preprocess::Image& image) {
  if (image.type() != CV_8UC3) throw UnreadableImage("tile " + tile_id + " is not 8-bit RGB");
  preprocess::Image tile = image;
  if (tile.rows != ds.px || tile.cols != ds.px) tile = preprocess::resize(tile, ds.px);
  if (!tile.isContinuous()) tile = tile.clone();
  TileSample s{std::move(tile_id), std::move(patient_id), label, {}};
  s.rgb.assign(tile.data, tile.data + tile.total() * 3);
  ds.samples.push_back(std::move(s));
}

TileDataset load_dataset(const CohortManifest& manifest, const std::vector<TileRecord>& tiles,
                         const std::filesystem::path& tiles_dir, int px) {
  std::map<std::string, const SlideRecord*> slides;
  for (const auto& s : manifest.slides) slides[s.slide_id] = &s;
  std::vector<const TileRecord*> chosen;
  for (const auto& t : tiles) {
    if (t.selected && slides.count(t.slide_id)) chosen.push_back(&t);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const TileRecord* a, const TileRecord* b) { return a->tile_id() < b->tile_id(); });
  TileDataset ds;
  ds.px = px;
  for (const auto* t : chosen) {
    if (t->tile_path.empty()) throw InvariantViolation("selected tile " + t->tile_id() + " has no tile_path");
    std::filesystem::path path = t->tile_path;
    if (path.is_relative()) path = tiles_dir / path;
    const SlideRecord& slide = *slides.at(t->slide_id);
    add_sample(ds, t->tile_id(), slide.patient_id, slide.label(manifest.task), preprocess::read_rgb(path));
  }
  return ds;
}

template <typename T>
nn::Tensor<T> make_batch(const TileDataset& ds, const std::vector<std::size_t>& indices) {
  const std::size_t plane = static_cast<std::size_t>(ds.px) * static_cast<std::size_t>(ds.px);
  std::vector<T> values(indices.size() * 3 * plane);
  T lut[256];
  for (int v = 0; v < 256; ++v) lut[v] = static_cast<T>((v / 255.0 - kInputMean) / kInputStd);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& rgb = ds.samples.at(indices[b]).rgb;
    T* out = values.data() + b * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      for (std::size_t c = 0; c < 3; ++c) out[c * plane + i] = lut[rgb[i * 3 + c]];
    }
  }
  return nn::Tensor<T>::from({static_cast<std::int64_t>(indices.size()), 3, ds.px, ds.px}, std::move(values));
}

template nn::Tensor<float> make_batch(const TileDataset&, const std::vector<std::size_t>&);
template nn::Tensor<double> make_batch(const TileDataset&, const std::vector<std::size_t>&);

}  // namespace tilebench::train
