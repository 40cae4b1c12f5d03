#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tilebench/core/config.hpp"
#include "tilebench/core/types.hpp"
#include "tilebench/nn/spec.hpp"
#include "tilebench/preprocess/config.hpp"
#include "tilebench/tissue/tissue.hpp"
#include "tilebench/train/config.hpp"

namespace tilebench::cli {

inline constexpr const char* kSeedEnv = "TILEBENCH_SEED";

// One document drives every stage:
//
//   [run]        task, seed, threads, output_dir
//   [paths]      manifest, slides_dir, tissue_scores
//   [preprocess] see PreprocessConfig
//   [tissue]     scorer (baseline | external), cap, min_tumor_prob
//   [model]      see ArchitectureSpec
//   [train]      see TrainConfig
//   [metrics]    n_bootstrap, level
//   [benchmark]  trained, forward_only (family lists)
//
// Relative paths resolve against the config file's directory.
struct RunConfig {
  KeyValueConfig source;
  Task task = Task::MSI;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path output_dir = "tilebench_out";
  std::filesystem::path manifest;
  std::filesystem::path slides_dir;  // defaults to the manifest's directory
  std::filesystem::path tissue_scores;
  preprocess::PreprocessConfig preprocess;
  tissue::TissueScorer scorer;
  tissue::TumorGate gate;
  nn::ArchitectureSpec model;
  train::TrainConfig train;
  int n_bootstrap = 1000;
  double level = 0.95;
  std::vector<nn::Family> benchmark_trained;
  std::vector<nn::Family> benchmark_forward_only;

  // Seed: run.seed, else `env_seed`, else 0. Throws ConfigError.
  static RunConfig from(const KeyValueConfig& cfg, const std::filesystem::path& base_dir,
                        std::optional<std::uint64_t> env_seed);

  // Throws ConfigError unless the manifest file exists.
  void require_manifest() const;

  // "<task>_<family>", the per-model artifact key.
  std::string model_key(nn::Family family) const;

  std::filesystem::path tiles_dir() const { return output_dir / "tiles"; }
  std::filesystem::path selected_manifest() const { return output_dir / "manifest_selected.jsonl"; }
  std::filesystem::path tile_index() const { return output_dir / "tiles.jsonl"; }
  std::filesystem::path selected_tiles() const { return output_dir / "tiles_selected.jsonl"; }
  std::filesystem::path train_dir(nn::Family family) const { return output_dir / "train" / model_key(family); }
  std::filesystem::path predict_dir(nn::Family family) const { return output_dir / "predict" / model_key(family); }
  std::filesystem::path reports_dir() const { return output_dir / "reports"; }
  std::filesystem::path curves_dir() const { return output_dir / "curves"; }
  std::filesystem::path benchmark_dir() const { return output_dir / "benchmark"; }
  std::filesystem::path meta_dir() const { return output_dir / "meta"; }
};

std::optional<std::uint64_t> seed_from_env();
std::uint64_t parse_seed(const std::string& text);

}  // namespace tilebench::cli
