#include "tilebench/metrics/timing.hpp"

#include <chrono>
#include <numeric>

#include "tilebench/nn/models.hpp"
#include "tilebench/train/aggregate.hpp"
#include "tilebench/train/trainer.hpp"

namespace tilebench::metrics {

TimingReport timing_harness(const nn::ArchitectureSpec& spec, const train::TileDataset& fixture,
                            const train::TrainConfig& cfg, std::uint64_t seed, const TimingOptions& opt) {
  using Clock = std::chrono::steady_clock;
  TimingReport rep;
  rep.spec = spec;
  rep.parameter_count = nn::count_parameters(spec);
  auto model = nn::build_model<float>(spec, seed);
  if (opt.train_epoch) {
    std::vector<std::size_t> order(fixture.size());
    std::iota(order.begin(), order.end(), 0);
    const auto weights = cfg.class_weights ? *cfg.class_weights : train::inverse_frequency_weights(fixture.labels());
    train::AdamState<float> state;
    const auto start = Clock::now();
    train::train_epoch(*model, fixture, order, weights, cfg.batch_size, state, train::adam_config(cfg));
    rep.epoch_train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  }
  const auto start = Clock::now();
  const auto tiles = train::predict_tiles(*model, fixture, Task::MSI, cfg.batch_size, opt.threads);
  train::aggregate(tiles, fixture.tile_to_patient(), cfg.aggregation, cfg.top_k);
  rep.full_prediction_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rep;
}

}  // namespace tilebench::metrics
