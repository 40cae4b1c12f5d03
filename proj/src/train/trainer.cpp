#include "tilebench/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/parallel.hpp"
#include "tilebench/core/rng.hpp"
#include "tilebench/nn/checkpoint.hpp"
#include "tilebench/nn/ops.hpp"

namespace tilebench::train {

namespace {

// Consecutive chunks of `order`; a trailing single item joins the previous
// chunk so batch statistics never come from one tile.
std::vector<std::vector<std::size_t>> chunk(const std::vector<std::size_t>& order, int batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

std::vector<int> labels_of(const TileDataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) {
    const auto& s = ds.samples[i];
    if (!s.label) throw InvariantViolation("tile " + s.tile_id + " is unlabeled");
    out.push_back(*s.label);
  }
  return out;
}

template <typename T>
std::vector<T> weight_vector(const std::array<double, 2>& w) {
  return {static_cast<T>(w[0]), static_cast<T>(w[1])};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::array<double, 2> inverse_frequency_weights(const std::vector<int>& labels) {
  std::array<double, 2> count{0.0, 0.0};
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvariantViolation("label outside {0,1}");
    count[static_cast<std::size_t>(y)] += 1.0;
  }
  if (count[0] == 0.0 || count[1] == 0.0) throw SingleClass("training labels contain one class only");
  const double n = count[0] + count[1];
  return {n / (2.0 * count[0]), n / (2.0 * count[1])};
}

AdamConfig adam_config(const TrainConfig& cfg) {
  return {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
}

std::string log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,val_loss,epoch_seconds\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.val_loss) + "," +
           format_double(e.epoch_seconds) + "\n";
  }
  return out;
}

double evaluate_loss(nn::Model<float>& model, const TileDataset& ds, const std::array<double, 2>& weights,
                     int batch_size) {
  if (ds.size() == 0) throw InvariantViolation("empty validation set");
  nn::NoGradGuard no_grad;
  const bool was_training = model.training();
  model.set_training(false);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  const auto w = weight_vector<float>(weights);
  double total = 0.0;
  for (const auto& idx : chunk(order, batch_size)) {
    auto logits = model.forward(make_batch<float>(ds, idx));
    total += static_cast<double>(nn::ops::weighted_cross_entropy(logits, labels_of(ds, idx), w).item()) *
             static_cast<double>(idx.size());
  }
  model.set_training(was_training);
  return total / static_cast<double>(ds.size());
}

double train_epoch(nn::Model<float>& model, const TileDataset& ds, const std::vector<std::size_t>& order,
                   const std::array<double, 2>& weights, int batch_size, AdamState<float>& state,
                   const AdamConfig& adam) {
  model.set_training(true);
  auto params = model.parameters();
  const auto w = weight_vector<float>(weights);
  double total = 0.0;
  const auto batches = chunk(order, batch_size);
  for (const auto& idx : batches) {
    zero_grad(params);
    auto loss = nn::ops::weighted_cross_entropy(model.forward(make_batch<float>(ds, idx)), labels_of(ds, idx), w);
    const double value = loss.item();
    if (!std::isfinite(value)) throw NonFiniteGradient("training loss is not finite");
    loss.backward();
    adam_step(params, state, adam);
    total += value;
  }
  zero_grad(params);
  return total / static_cast<double>(batches.size());
}

TrainResult train_model(const nn::ArchitectureSpec& spec, const TileDataset& train, const TileDataset& val,
                        const TrainConfig& cfg, std::uint64_t seed, const EpochHook& hook) {
  cfg.validate();
  if (train.size() == 0) throw InvariantViolation("empty training set");
  if (train.px != spec.input_px || val.px != spec.input_px) {
    throw ShapeMismatch("tiles are " + std::to_string(train.px) + " px, model expects " + std::to_string(spec.input_px));
  }
  TrainResult result;
  result.class_weights = cfg.class_weights ? *cfg.class_weights : inverse_frequency_weights(train.labels());
  result.model = nn::build_model<float>(spec, mix_seed(seed, "init"));
  auto& model = *result.model;
  const AdamConfig adam = adam_config(cfg);
  AdamState<float> state;
  EarlyStopping stopper(cfg.patience);
  nn::StateSnapshot<float> best = nn::snapshot(model);
  Rng shuffle(mix_seed(seed, "shuffle"));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = train_epoch(model, train, order, result.class_weights, cfg.batch_size, state, adam);
    entry.val_loss = evaluate_loss(model, val, result.class_weights, cfg.batch_size);
    entry.epoch_seconds = seconds_since(start);
    result.log.push_back(entry);
    if (hook) hook(entry);
    if (stopper.update(epoch, entry.val_loss)) best = nn::snapshot(model);
    if (stopper.should_stop()) break;
  }
  nn::restore(model, best);
  model.set_training(false);
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_val_loss();
  return result;
}

template <typename T>
std::vector<double> fit_batch(nn::Model<T>& model, const nn::Tensor<T>& x, const std::vector<int>& labels,
                              const std::array<double, 2>& weights, const AdamConfig& adam, int steps) {
  model.set_training(true);
  auto params = model.parameters();
  AdamState<T> state;
  const auto w = weight_vector<T>(weights);
  std::vector<double> losses;
  for (int s = 0; s < steps; ++s) {
    zero_grad(params);
    auto loss = nn::ops::weighted_cross_entropy(model.forward(x), labels, w);
    losses.push_back(static_cast<double>(loss.item()));
    loss.backward();
    adam_step(params, state, adam);
  }
  zero_grad(params);
  return losses;
}

template std::vector<double> fit_batch(nn::Model<float>&, const nn::Tensor<float>&, const std::vector<int>&,
                                       const std::array<double, 2>&, const AdamConfig&, int);
template std::vector<double> fit_batch(nn::Model<double>&, const nn::Tensor<double>&, const std::vector<int>&,
                                       const std::array<double, 2>&, const AdamConfig&, int);

ScoreTable predict_tiles(nn::Model<float>& model, const TileDataset& ds, Task task, int batch_size, int threads) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  model.set_training(false);
  const auto classes = static_cast<std::size_t>(model.spec().num_classes);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < ds.size(); i += static_cast<std::size_t>(batch_size)) {
    std::vector<std::size_t> idx;
    for (std::size_t j = i; j < std::min(ds.size(), i + static_cast<std::size_t>(batch_size)); ++j) idx.push_back(j);
    batches.push_back(std::move(idx));
  }
  std::vector<double> prob(ds.size());
  parallel_for(batches.size(), threads, [&](std::size_t b) {
    nn::NoGradGuard no_grad;
    auto p = nn::ops::softmax(model.forward(make_batch<float>(ds, batches[b])));
    for (std::size_t r = 0; r < batches[b].size(); ++r) prob[batches[b][r]] = static_cast<double>(p.values()[r * classes + 1]);
  });
  ScoreTable out;
  out.rows.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.rows.push_back({ds.samples[i].tile_id, task, prob[i], ds.samples[i].label});
  }
  return out;
}

}  // namespace tilebench::train
