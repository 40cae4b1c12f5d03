#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tilebench/core/score_table.hpp"
#include "tilebench/nn/models.hpp"
#include "tilebench/train/config.hpp"
#include "tilebench/train/dataset.hpp"
#include "tilebench/train/optim.hpp"

namespace tilebench::train {

// w_c = N / (2 N_c). Throws SingleClass when a class is absent.
std::array<double, 2> inverse_frequency_weights(const std::vector<int>& labels);

AdamConfig adam_config(const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double epoch_seconds = 0.0;
};

// epoch,train_loss,val_loss,epoch_seconds
std::string log_csv(const std::vector<EpochLog>& log);

struct TrainResult {
  std::unique_ptr<nn::Model<float>> model;  // best-validation-loss weights, eval mode
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::array<double, 2> class_weights{1.0, 1.0};
};

// Epoch callback, e.g. for progress output.
using EpochHook = std::function<void(const EpochLog&)>;

// Builds the model from `seed`, shuffles the training tiles every epoch
// (stream derived from `seed`), runs Adam on the weighted cross-entropy and
// stops once validation loss has not improved for cfg.patience epochs or
// after cfg.max_epochs. Single-threaded and deterministic.
TrainResult train_model(const nn::ArchitectureSpec& spec, const TileDataset& train, const TileDataset& val,
                        const TrainConfig& cfg, std::uint64_t seed, const EpochHook& hook = {});

// Mean weighted cross-entropy over the dataset in eval mode.
double evaluate_loss(nn::Model<float>& model, const TileDataset& ds, const std::array<double, 2>& weights,
                     int batch_size);

// One training epoch over `order`; returns the mean batch loss.
double train_epoch(nn::Model<float>& model, const TileDataset& ds, const std::vector<std::size_t>& order,
                   const std::array<double, 2>& weights, int batch_size, AdamState<float>& state,
                   const AdamConfig& adam);

// `steps` Adam updates on one fixed batch; returns the loss before each step.
template <typename T>
std::vector<double> fit_batch(nn::Model<T>& model, const nn::Tensor<T>& x, const std::vector<int>& labels,
                              const std::array<double, 2>& weights, const AdamConfig& adam, int steps);

// Softmax probability of class 1 per tile (entity_id = tile id). Batches are
// scored in parallel on the shared model in eval mode; every tile's score
// depends only on its own pixels.
ScoreTable predict_tiles(nn::Model<float>& model, const TileDataset& ds, Task task, int batch_size = 16,
                         int threads = 1);

}  // namespace tilebench::train
