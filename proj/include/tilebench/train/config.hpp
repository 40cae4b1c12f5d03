#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "tilebench/core/config.hpp"

namespace tilebench::train {

enum class Aggregation { Mean, Median, TopKMean };

std::string_view aggregation_name(Aggregation a);
Aggregation parse_aggregation(std::string_view text);

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Unset: N / (2 N_c) from the training fold.
  std::optional<std::array<double, 2>> class_weights;
  int max_epochs = 30;
  int patience = 5;
  int batch_size = 16;
  int folds = 5;
  Aggregation aggregation = Aggregation::Mean;
  int top_k = 10;  // tiles averaged by TopKMean

  // Throws ConfigError.
  void validate() const;

  static TrainConfig from_config(const KeyValueConfig& cfg, const std::string& section = "train");
  void to_config(KeyValueConfig& cfg, const std::string& section = "train") const;
};

}  // namespace tilebench::train
