#pragma once

#include <cstdint>

#include "tilebench/nn/spec.hpp"
#include "tilebench/train/config.hpp"
#include "tilebench/train/dataset.hpp"

namespace tilebench::metrics {

struct TimingReport {
  double epoch_train_seconds = 0.0;
  double full_prediction_seconds = 0.0;
  nn::ArchitectureSpec spec;
  std::int64_t parameter_count = 0;
};

struct TimingOptions {
  bool train_epoch = true;  // false: prediction only, epoch time stays 0
  int threads = 1;
};

// Wall clock of one training epoch over the fixture tiles and of scoring every
// fixture tile and aggregating per patient, on a fresh model built from `seed`.
TimingReport timing_harness(const nn::ArchitectureSpec& spec, const train::TileDataset& fixture,
                            const train::TrainConfig& cfg, std::uint64_t seed, const TimingOptions& opt = {});

}  // namespace tilebench::metrics
