#include "tilebench/tissue/tissue.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/core/parallel.hpp"
#include "tilebench/core/rng.hpp"

namespace tilebench::tissue {

std::string_view class_name(TissueClass c) {
  static constexpr std::array<std::string_view, kNumTissueClasses> names = {"ADI", "BACK", "DEB", "LYM", "MUC",
                                                                          "MUS", "NORM", "STR", "TUM"};
  return names[static_cast<std::size_t>(c)];
}

TissueClass argmax_class(const TissueProbs& probs) {
  return static_cast<TissueClass>(std::distance(probs.begin(), std::max_element(probs.begin(), probs.end())));
}

void check_simplex(const TissueProbs& probs, const std::string& tile_id) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw MalformedProbs("tile " + tile_id + ": probability outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw MalformedProbs("tile " + tile_id + ": probabilities sum to " + std::to_string(sum));
  }
}

BaselineFeatures baseline_features(const preprocess::Image& tile) {
  std::array<double, 256> od{};
  for (int v = 0; v < 256; ++v) od[v] = -std::log10((v + 1.0) / 255.0);
  std::size_t tissue = 0;
  std::size_t nuclear = 0;
  for (auto it = tile.begin<cv::Vec3b>(); it != tile.end<cv::Vec3b>(); ++it) {
    const double r = od[(*it)[0]];
    const double g = od[(*it)[1]];
    const double b = od[(*it)[2]];
    if (std::max({r, g, b}) < 0.15) continue;
    ++tissue;
    if (r >= 0.5 * g) ++nuclear;
  }
  BaselineFeatures f;
  f.tissue_fraction = static_cast<double>(tissue) / static_cast<double>(tile.total());
  f.nuclear_fraction = tissue ? static_cast<double>(nuclear) / static_cast<double>(tissue) : 0.0;
  return f;
}

TissueProbs baseline_probs(const BaselineFeatures& f) {
  std::array<double, kNumTissueClasses> logits;
  logits.fill(-4.0);
  const double tissue_term = 12.0 * (f.tissue_fraction - 0.25);
  const double nuclear_term = 6.0 * (f.nuclear_fraction - 0.1);
  logits[static_cast<std::size_t>(TissueClass::BACK)] = -tissue_term;
  logits[static_cast<std::size_t>(TissueClass::TUM)] = tissue_term + nuclear_term;
  logits[static_cast<std::size_t>(TissueClass::STR)] = tissue_term - nuclear_term;
  const double top = *std::max_element(logits.begin(), logits.end());
  TissueProbs probs{};
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumTissueClasses; ++i) sum += probs[i] = std::exp(logits[i] - top);
  for (auto& p : probs) p /= sum;
  return probs;
}

ExternalScores read_external_scores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "tile_id,ADI,BACK,DEB,LYM,MUC,MUS,NORM,STR,TUM") {
    throw ParseError("tissue score file must start with 'tile_id,ADI,BACK,DEB,LYM,MUC,MUS,NORM,STR,TUM'");
  }
  ExternalScores scores;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split(trim(line), ',');
    if (cols.size() != kNumTissueClasses + 1) {
      throw ParseError("tissue score line " + std::to_string(lineno) + ": expected 10 columns");
    }
    TissueProbs probs{};
    for (std::size_t i = 0; i < kNumTissueClasses; ++i) {
      const auto& s = cols[i + 1];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), probs[i]);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError("tissue score line " + std::to_string(lineno) + ": bad probability '" + s + "'");
      }
    }
    scores[cols[0]] = probs;
  }
  return scores;
}

ExternalScores load_external_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tissue scores " + path.string());
  return read_external_scores(in);
}

std::vector<TileRecord> classify_tiles(std::vector<TileRecord> tiles, const ExternalScores& scores) {
  for (auto& t : tiles) {
    if (!t.qc_pass) continue;
    auto it = scores.find(t.tile_id());
    if (it == scores.end()) throw MissingScore("tile " + t.tile_id() + " has no external tissue score");
    check_simplex(it->second, t.tile_id());
    t.tissue_probs = it->second;
  }
  return tiles;
}

std::vector<TileRecord> classify_tiles(std::vector<TileRecord> tiles, const TissueScorer& scorer, int threads,
                                      const std::filesystem::path& tiles_dir) {
  if (scorer.kind == TissueScorer::Kind::ExternalScoresFile) {
    return classify_tiles(std::move(tiles), load_external_scores(scorer.source));
  }
  parallel_for(tiles.size(), threads, [&](std::size_t i) {
    auto& t = tiles[i];
    if (!t.qc_pass) return;
    std::filesystem::path path = t.tile_path;
    if (path.is_relative()) path = tiles_dir / path;
    t.tissue_probs = baseline_probs(baseline_features(preprocess::read_rgb(path)));
  });
  return tiles;
}

bool is_tumor(const TileRecord& tile, const TumorGate& gate) {
  if (!tile.qc_pass || !tile.tissue_probs) return false;
  const auto& p = *tile.tissue_probs;
  return argmax_class(p) == TissueClass::TUM && p[static_cast<std::size_t>(TissueClass::TUM)] >= gate.min_tumor_prob;
}

std::vector<TileRecord> select_tumor_tiles(const std::vector<TileRecord>& tiles, const std::string& patient_id,
                                           std::uint64_t seed, const TumorGate& gate) {
  std::vector<const TileRecord*> tumor;
  for (const auto& t : tiles) {
    if (t.qc_pass && !t.tissue_probs) {
      throw InvariantViolation("tile " + t.tile_id() + " has not been classified");
    }
    if (is_tumor(t, gate)) tumor.push_back(&t);
  }
  if (tumor.empty()) throw NoTumorTiles("patient " + patient_id + " has no tumor tiles");
  std::sort(tumor.begin(), tumor.end(), [](const TileRecord* a, const TileRecord* b) {
    return a->tile_id() < b->tile_id();
  });
  if (tumor.size() > gate.cap) {
    // Partial Fisher-Yates over the sorted ids.
    Rng rng(mix_seed(seed, patient_id));
    for (std::size_t i = 0; i < gate.cap; ++i) {
      const std::size_t j = i + uniform_index(rng, tumor.size() - i);
      std::swap(tumor[i], tumor[j]);
    }
    tumor.resize(gate.cap);
    std::sort(tumor.begin(), tumor.end(), [](const TileRecord* a, const TileRecord* b) {
      return a->tile_id() < b->tile_id();
    });
  }
  std::vector<TileRecord> out;
  out.reserve(tumor.size());
  for (const auto* t : tumor) {
    out.push_back(*t);
    out.back().selected = true;
  }
  return out;
}

SelectionReport select_cohort(const CohortManifest& manifest, std::vector<TileRecord> tiles, std::uint64_t seed,
                              const TumorGate& gate) {
  SelectionReport report;
  for (auto& t : tiles) t.selected = false;
  std::set<std::string> chosen;
  for (const auto& slide : manifest.slides) {
    std::vector<TileRecord> own;
    for (const auto& t : tiles) {
      if (t.slide_id == slide.slide_id) own.push_back(t);
    }
    try {
      for (const auto& t : select_tumor_tiles(own, slide.patient_id, seed, gate)) chosen.insert(t.tile_id());
    } catch (const NoTumorTiles&) {
      report.excluded_patients.push_back(slide.patient_id);
    }
  }
  for (auto& t : tiles) t.selected = chosen.count(t.tile_id()) != 0;
  report.tiles = std::move(tiles);
  return report;
}

}  // namespace tilebench::tissue
