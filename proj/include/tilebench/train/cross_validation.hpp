#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tilebench/core/score_table.hpp"
#include "tilebench/train/folds.hpp"
#include "tilebench/train/trainer.hpp"

namespace tilebench::train {

struct FoldResult {
  int fold = 0;      // held-out fold, scored once at the end
  int val_fold = 0;  // drives early stopping and model selection
  TrainResult train;
  double val_auroc = 0.0;  // patient level; NaN when the fold holds one class
  ScoreTable held_out_tiles;
  ScoreTable held_out_patients;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  // Every patient scored by the one model that never saw it, sorted by id.
  ScoreTable held_out_patients;
  int best_fold = 0;  // highest val_auroc, then lowest best_val_loss
};

using FoldHook = std::function<void(int fold, const EpochLog&)>;

// Fold f is held out; fold (f + 1) mod k is the validation fold; the rest
// train. Fold f uses seed mix_seed(seed, f). Folds run on up to `threads`
// workers and the result does not depend on the thread count.
CrossValidationResult cross_validate(const nn::ArchitectureSpec& spec, const TileDataset& data, const FoldPlan& plan,
                                     const TrainConfig& cfg, Task task, std::uint64_t seed, int threads = 1,
                                     const FoldHook& hook = {});

// Per-entity mean over several score tables holding the same entities.
// Throws InvariantViolation when the entity sets differ.
ScoreTable ensemble_average(const std::vector<ScoreTable>& tables);

}  // namespace tilebench::train
