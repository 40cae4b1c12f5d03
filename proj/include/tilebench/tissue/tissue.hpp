#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tilebench/core/types.hpp"
#include "tilebench/preprocess/image.hpp"

namespace tilebench::tissue {

// Nine-class colorectal tissue taxonomy; TUM is tumor epithelium.
enum class TissueClass { ADI, BACK, DEB, LYM, MUC, MUS, NORM, STR, TUM };

inline constexpr std::array<TissueClass, kNumTissueClasses> kAllTissueClasses = {
    TissueClass::ADI, TissueClass::BACK, TissueClass::DEB, TissueClass::LYM, TissueClass::MUC,
    TissueClass::MUS, TissueClass::NORM, TissueClass::STR, TissueClass::TUM};

std::string_view class_name(TissueClass c);
TissueClass argmax_class(const TissueProbs& probs);

// Throws MalformedProbs unless every entry is in [0, 1] and the sum is 1 +- 1e-6.
void check_simplex(const TissueProbs& probs, const std::string& tile_id);

// Colour-statistics stand-in for a trained nine-class model. Features on the
// tile (OD = -log10((v + 1) / 255) per channel):
//   tissue_fraction: share of pixels whose largest channel OD is >= 0.15
//   nuclear_fraction: share of tissue pixels with OD_red >= 0.5 * OD_green
//                     (hematoxylin absorbs red; eosin barely does)
// Logits, then softmax:
//   BACK = 12 (0.25 - tissue_fraction)
//   TUM  = 12 (tissue_fraction - 0.25) + 6 (nuclear_fraction - 0.1)
//   STR  = 12 (tissue_fraction - 0.25) - 6 (nuclear_fraction - 0.1)
//   every other class = -4
struct BaselineFeatures {
  double tissue_fraction = 0.0;
  double nuclear_fraction = 0.0;
};

BaselineFeatures baseline_features(const preprocess::Image& tile);
TissueProbs baseline_probs(const BaselineFeatures& features);

// External scores keyed by tile id; CSV header tile_id,ADI,BACK,DEB,LYM,MUC,MUS,NORM,STR,TUM
using ExternalScores = std::map<std::string, TissueProbs>;
ExternalScores read_external_scores(std::istream& in);
ExternalScores load_external_scores(const std::filesystem::path& path);

struct TissueScorer {
  enum class Kind { ExternalScoresFile, BuiltinBaseline };
  Kind kind = Kind::BuiltinBaseline;
  std::filesystem::path source;  // scores file for ExternalScoresFile

  static TissueScorer baseline() { return {}; }
  static TissueScorer external(std::filesystem::path path) { return {Kind::ExternalScoresFile, std::move(path)}; }
};

// Attaches tissue_probs to every QC-passing tile. Pixels are only read;
// relative tile paths resolve against tiles_dir.
// Throws MissingScore / MalformedProbs for bad external input.
std::vector<TileRecord> classify_tiles(std::vector<TileRecord> tiles, const TissueScorer& scorer, int threads = 1,
                                      const std::filesystem::path& tiles_dir = {});
std::vector<TileRecord> classify_tiles(std::vector<TileRecord> tiles, const ExternalScores& scores);

struct TumorGate {
  std::size_t cap = 500;
  // Optional extra gate on P(TUM); 0 keeps the plain argmax rule.
  double min_tumor_prob = 0.0;
};

bool is_tumor(const TileRecord& tile, const TumorGate& gate);

// Tumor tiles of one patient; when more than `cap`, a seeded uniform sample of
// exactly `cap` without replacement. The result depends only on
// (patient_id, tile ids, seed) and lists tile ids in sorted order.
// Throws NoTumorTiles when no tile passes the gate.
std::vector<TileRecord> select_tumor_tiles(const std::vector<TileRecord>& tiles, const std::string& patient_id,
                                           std::uint64_t seed, const TumorGate& gate = {});

struct SelectionReport {
  std::vector<TileRecord> tiles;                 // input tiles with `selected` set
  std::vector<std::string> excluded_patients;   // no tumor tiles
};

// Applies select_tumor_tiles per patient across a cohort.
SelectionReport select_cohort(const CohortManifest& manifest, std::vector<TileRecord> tiles, std::uint64_t seed,
                              const TumorGate& gate = {});

}  // namespace tilebench::tissue
