#include "tilebench/train/config.hpp"

#include <cmath>

#include "tilebench/core/errors.hpp"

namespace tilebench::train {

std::string_view aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Median: return "median";
    case Aggregation::TopKMean: return "top_k_mean";
  }
  return "mean";
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "mean") return Aggregation::Mean;
  if (text == "median") return Aggregation::Median;
  if (text == "top_k_mean") return Aggregation::TopKMean;
  throw ConfigError("unknown aggregation '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (class_weights && !((*class_weights)[0] > 0.0 && (*class_weights)[1] > 0.0)) {
    throw ConfigError("class weights must be positive");
  }
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg, const std::string& section) {
  const std::string p = section + ".";
  TrainConfig c;
  c.learning_rate = cfg.get_double(p + "learning_rate", c.learning_rate);
  c.beta1 = cfg.get_double(p + "beta1", c.beta1);
  c.beta2 = cfg.get_double(p + "beta2", c.beta2);
  c.epsilon = cfg.get_double(p + "epsilon", c.epsilon);
  if (cfg.contains(p + "class_weights")) {
    const auto w = cfg.get_doubles(p + "class_weights", {});
    if (w.size() != 2) throw ConfigError("class_weights needs exactly two values");
    c.class_weights = std::array<double, 2>{w[0], w[1]};
  }
  c.max_epochs = static_cast<int>(cfg.get_int(p + "max_epochs", c.max_epochs));
  c.patience = static_cast<int>(cfg.get_int(p + "patience", c.patience));
  c.batch_size = static_cast<int>(cfg.get_int(p + "batch_size", c.batch_size));
  c.folds = static_cast<int>(cfg.get_int(p + "folds", c.folds));
  c.aggregation = parse_aggregation(cfg.get_string(p + "aggregation", std::string(aggregation_name(c.aggregation))));
  c.top_k = static_cast<int>(cfg.get_int(p + "top_k", c.top_k));
  c.validate();
  return c;
}

void TrainConfig::to_config(KeyValueConfig& cfg, const std::string& section) const {
  const std::string p = section + ".";
  cfg.set(p + "learning_rate", learning_rate);
  cfg.set(p + "beta1", beta1);
  cfg.set(p + "beta2", beta2);
  cfg.set(p + "epsilon", epsilon);
  if (class_weights) cfg.set(p + "class_weights", std::vector<double>{(*class_weights)[0], (*class_weights)[1]});
  cfg.set(p + "max_epochs", max_epochs);
  cfg.set(p + "patience", patience);
  cfg.set(p + "batch_size", batch_size);
  cfg.set(p + "folds", folds);
  cfg.set(p + "aggregation", std::string(aggregation_name(aggregation)));
  cfg.set(p + "top_k", top_k);
}

}  // namespace tilebench::train
