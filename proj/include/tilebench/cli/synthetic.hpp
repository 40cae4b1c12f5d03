#pragma once

#include <cstdint>
#include <filesystem>

#include "tilebench/core/types.hpp"
#include "tilebench/preprocess/image.hpp"

namespace tilebench::cli {

// H&E-like slides drawn from stain optical densities. Each slide is a 3 x 2
// grid of 256 px cells at 1 um/px (one tile each at 0.5 um/px, 512 px):
// `tumor_tiles` tumor cells, one stroma cell, the rest blank glass.
//   tumor, label 0: small nuclei (radius 3-4 px) covering about 20%
//   tumor, label 1: large nuclei (radius 8-10 px) covering about 40%
//   stroma: banded eosin fibres with sparse small nuclei
// Every slide also gets its own stain rotation and intensity, which stain
// normalization is expected to remove.
struct SyntheticCohortOptions {
  int patients = 60;
  double positive_fraction = 0.5;
  int tumor_tiles = 4;  // 1..5
  Task task = Task::MSI;
  std::uint64_t seed = 0;
};

enum class SyntheticTissue { Tumor, Stroma, Glass };

// One 256 x 256 cell; stain_seed fixes the slide's stain draw, texture_seed the cell.
preprocess::Image synthetic_cell(SyntheticTissue kind, int label, std::uint64_t stain_seed, std::uint64_t texture_seed);

// Writes <dir>/slides/<slide_id>.png and <dir>/manifest.jsonl; returns the manifest.
CohortManifest write_synthetic_cohort(const std::filesystem::path& dir, const SyntheticCohortOptions& opt);

}  // namespace tilebench::cli
