#include "tilebench/train/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/parallel.hpp"
#include "tilebench/core/rng.hpp"
#include "tilebench/metrics/metrics.hpp"
#include "tilebench/train/aggregate.hpp"

namespace tilebench::train {

namespace {

double patient_auroc(const ScoreTable& patients) {
  const auto labels = patients.labels();
  const bool both = std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0;
  return both ? metrics::auroc(patients.scores(), labels) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

CrossValidationResult cross_validate(const nn::ArchitectureSpec& spec, const TileDataset& data, const FoldPlan& plan,
                                     const TrainConfig& cfg, Task task, std::uint64_t seed, int threads,
                                     const FoldHook& hook) {
  cfg.validate();
  const auto tile_patient = data.tile_to_patient();
  for (const auto& s : data.samples) {
    if (!plan.assignments.count(s.patient_id)) throw InvariantViolation("patient " + s.patient_id + " is in no fold");
  }
  CrossValidationResult out;
  out.folds.resize(static_cast<std::size_t>(plan.k));
  const int inner_threads = threads > 1 ? 1 : threads;
  parallel_for(static_cast<std::size_t>(plan.k), threads, [&](std::size_t i) {
    const int f = static_cast<int>(i);
    FoldResult& r = out.folds[i];
    r.fold = f;
    r.val_fold = (f + 1) % plan.k;
    const auto test_patients = plan.patients_in(f);
    const auto val_patients = plan.patients_in(r.val_fold);
    const auto train_ds = data.subset(plan.patients_outside({f, r.val_fold}));
    const auto val_ds = data.subset(val_patients);
    const auto test_ds = data.subset(test_patients);
    EpochHook epoch_hook;
    if (hook) epoch_hook = [&](const EpochLog& e) { hook(f, e); };
    r.train = train_model(spec, train_ds, val_ds, cfg, mix_seed(seed, static_cast<std::uint64_t>(f)), epoch_hook);
    auto& model = *r.train.model;
    const auto val_patients_scores =
        aggregate(predict_tiles(model, val_ds, task, cfg.batch_size, inner_threads), tile_patient, cfg.aggregation,
                  cfg.top_k);
    r.val_auroc = patient_auroc(val_patients_scores);
    r.held_out_tiles = predict_tiles(model, test_ds, task, cfg.batch_size, inner_threads);
    r.held_out_patients = aggregate(r.held_out_tiles, tile_patient, cfg.aggregation, cfg.top_k);
  });
  for (const auto& r : out.folds) {
    out.held_out_patients.rows.insert(out.held_out_patients.rows.end(), r.held_out_patients.rows.begin(),
                                      r.held_out_patients.rows.end());
  }
  std::sort(out.held_out_patients.rows.begin(), out.held_out_patients.rows.end(),
            [](const ScoreRow& a, const ScoreRow& b) { return a.entity_id < b.entity_id; });
  auto better = [](const FoldResult& a, const FoldResult& b) {
    const double aa = std::isnan(a.val_auroc) ? -1.0 : a.val_auroc;
    const double bb = std::isnan(b.val_auroc) ? -1.0 : b.val_auroc;
    if (aa != bb) return aa > bb;
    return a.train.best_val_loss < b.train.best_val_loss;
  };
  for (std::size_t i = 1; i < out.folds.size(); ++i) {
    if (better(out.folds[i], out.folds[static_cast<std::size_t>(out.best_fold)])) out.best_fold = static_cast<int>(i);
  }
  return out;
}

ScoreTable ensemble_average(const std::vector<ScoreTable>& tables) {
  if (tables.empty()) throw InvariantViolation("nothing to ensemble");
  std::map<std::string, std::size_t> index;
  ScoreTable out = tables.front();
  for (std::size_t i = 0; i < out.rows.size(); ++i) index[out.rows[i].entity_id] = i;
  for (std::size_t t = 1; t < tables.size(); ++t) {
    if (tables[t].rows.size() != out.rows.size()) throw InvariantViolation("ensemble members score different entities");
    for (const auto& row : tables[t].rows) {
      const auto it = index.find(row.entity_id);
      if (it == index.end()) throw InvariantViolation("entity " + row.entity_id + " missing from an ensemble member");
      out.rows[it->second].score += row.score;
    }
  }
  for (auto& row : out.rows) row.score /= static_cast<double>(tables.size());
  return out;
}

}  // namespace tilebench::train
