#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "tilebench/nn/tensor.hpp"

namespace tilebench::train {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

// Bias-corrected Adam on every parameter that has a gradient; parameters
// without one count as zero gradient. Throws NonFiniteGradient before
// touching anything if any gradient entry is NaN or infinite.
template <typename T>
void adam_step(std::vector<nn::Tensor<T>>& params, AdamState<T>& state, const AdamConfig& cfg);

template <typename T>
void zero_grad(std::vector<nn::Tensor<T>>& params);

// Patience counter on validation loss. An epoch improves only when its loss is
// strictly below the best so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  // Returns true when `val_loss` is the new best.
  bool update(int epoch, double val_loss);
  bool should_stop() const { return since_improvement_ >= patience_; }

  int best_epoch() const { return best_epoch_; }
  double best_val_loss() const { return best_; }
  int epochs_since_improvement() const { return since_improvement_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  int since_improvement_ = 0;
};

}  // namespace tilebench::train
