#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"
#include "tilebench/core/errors.hpp"
#include "tilebench/metrics/metrics.hpp"
#include "tilebench/metrics/timing.hpp"
#include "tilebench/nn/models.hpp"
#include "tilebench/train/aggregate.hpp"
#include "tilebench/train/cross_validation.hpp"
#include "tilebench/train/folds.hpp"
#include "tilebench/train/optim.hpp"
#include "tilebench/train/trainer.hpp"

using namespace tilebench;
using namespace tilebench::train;

namespace {

std::map<std::string, int> labels_fixture(int pos, int neg) {
  std::map<std::string, int> out;
  for (int i = 0; i < pos + neg; ++i) out["P" + std::to_string(1000 + i)] = i < pos ? 1 : 0;
  return out;
}

// Toy layouts at the smallest input each family accepts comfortably.
nn::ArchitectureSpec small_spec(nn::Family f) {
  auto s = nn::toy_spec(f);
  s.input_px = (f == nn::Family::ViT || f == nn::Family::MobileViT || f == nn::Family::CMT) ? 64 : 56;
  return s;
}

// Label 1 tiles carry a dark square in the centre, label 0 tiles are plain.
TileDataset separable(int patients, int tiles_per_patient, int px, std::uint64_t seed) {
  Rng rng(seed);
  TileDataset ds;
  ds.px = px;
  for (int p = 0; p < patients; ++p) {
    const int label = p % 2;
    for (int t = 0; t < tiles_per_patient; ++t) {
      TileSample s;
      s.patient_id = "P" + std::to_string(p);
      s.tile_id = s.patient_id + "_" + std::to_string(t);
      s.label = label;
      s.rgb.resize(static_cast<std::size_t>(px * px * 3));
      for (int r = 0; r < px; ++r)
        for (int c = 0; c < px; ++c) {
          const bool inside = label && std::abs(r - px / 2) < px / 4 && std::abs(c - px / 2) < px / 4;
          for (int ch = 0; ch < 3; ++ch) {
            const double base = inside ? 60.0 : 200.0;
            s.rgb[static_cast<std::size_t>((r * px + c) * 3 + ch)] =
                static_cast<std::uint8_t>(std::clamp(base + 20.0 * standard_normal(rng), 0.0, 255.0));
          }
        }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}


}  // namespace

TEST_SUITE("train") {

TEST_CASE("stratified folds partition patients and balance classes") {
  for (const auto& [pos, neg, k] : {std::tuple{23, 61, 5}, std::tuple{5, 5, 5}, std::tuple{17, 40, 3},
                                    std::tuple{50, 51, 10}}) {
    const auto labels = labels_fixture(pos, neg);
    const auto plan = stratified_kfold(labels, k, 42);
    CHECK(plan.assignments.size() == labels.size());
    std::vector<int> size(k, 0), npos(k, 0);
    for (const auto& [p, f] : plan.assignments) {
      REQUIRE(f >= 0);
      REQUIRE(f < k);
      ++size[f];
      npos[f] += labels.at(p);
    }
    const int total = pos + neg;
    for (int f = 0; f < k; ++f) {
      CHECK(std::abs(size[f] - static_cast<double>(total) / k) <= 1.0);
      CHECK(std::abs(npos[f] - static_cast<double>(pos) / k) <= 1.0);
      CHECK(std::abs((size[f] - npos[f]) - static_cast<double>(neg) / k) <= 1.0);
    }
    std::set<std::string> seen;
    for (int f = 0; f < k; ++f)
      for (const auto& p : plan.patients_in(f)) CHECK(seen.insert(p).second);
    CHECK(seen.size() == labels.size());
    CHECK(plan.patients_outside({0, 1}).size() == labels.size() - plan.patients_in(0).size() - plan.patients_in(1).size());
    CHECK(stratified_kfold(labels, k, 42).assignments == plan.assignments);
  }
  const auto labels = labels_fixture(20, 20);
  CHECK(stratified_kfold(labels, 5, 1).assignments != stratified_kfold(labels, 5, 2).assignments);
  CHECK_THROWS_AS(stratified_kfold(labels_fixture(4, 20), 5, 1), TooFewPatients);
  CHECK_THROWS_AS(stratified_kfold(labels_fixture(20, 20), 1, 1), ConfigError);
}

TEST_CASE("patient labels from a manifest") {
  CohortManifest m;
  m.task = Task::CIMP;
  SlideRecord a;
  a.slide_id = "A";
  a.patient_id = "P";
  a.labels[Task::CIMP] = 1;
  m.slides.push_back(a);
  auto b = a;
  b.slide_id = "B";
  m.slides.push_back(b);
  CHECK(patient_labels(m) == std::map<std::string, int>{{"P", 1}});
  m.slides[1].labels[Task::CIMP] = 0;
  CHECK_THROWS_AS(patient_labels(m), InvariantViolation);
  m.slides[1].labels.clear();
  CHECK_THROWS_AS(patient_labels(m), InvariantViolation);
}

TEST_CASE("adam follows the bias-corrected recurrence on theta squared") {
  for (double lr : {1e-4, 0.05}) {
    auto theta = nn::Tensor<double>::from({1}, {1.5}, true);
    std::vector<nn::Tensor<double>> params{theta};
    AdamState<double> state;
    AdamConfig cfg;
    cfg.learning_rate = lr;
    double x = 1.5, m = 0.0, v = 0.0;
    for (int t = 1; t <= 50; ++t) {
      zero_grad(params);
      nn::ops::sum(nn::ops::mul(theta, theta)).backward();
      adam_step(params, state, cfg);
      const double g = 2.0 * x;
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mh = m / (1.0 - std::pow(0.9, t));
      const double vh = v / (1.0 - std::pow(0.999, t));
      x -= lr * mh / (std::sqrt(vh) + 1e-8);
      REQUIRE(theta.values()[0] == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(state.step == 50);
  }
  // the first step moves by the learning rate whatever the gradient scale
  auto p = nn::Tensor<double>::from({2}, {3.0, -3.0}, true);
  std::vector<nn::Tensor<double>> ps{p};
  nn::ops::sum(nn::ops::mul(p, nn::Tensor<double>::from({2}, {1e-3, -50.0}))).backward();
  AdamState<double> st;
  adam_step(ps, st, {.learning_rate = 0.01});
  CHECK(p.values()[0] == doctest::Approx(2.99).epsilon(1e-6));
  CHECK(p.values()[1] == doctest::Approx(-2.99).epsilon(1e-6));
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
  auto p = nn::Tensor<double>::from({2}, {1.0, 2.0}, true);
  std::vector<nn::Tensor<double>> params{p};
  nn::ops::sum(nn::ops::mul(p, nn::Tensor<double>::from({2}, {std::nan(""), 1.0}))).backward();
  AdamState<double> state;
  CHECK_THROWS_AS(adam_step(params, state, {}), NonFiniteGradient);
  CHECK(p.values() == std::vector<double>{1.0, 2.0});
  CHECK(state.step == 0);
  zero_grad(params);
  CHECK(!p.has_grad());
}

TEST_CASE("defaults") {
  TrainConfig cfg;
  CHECK(cfg.learning_rate == 1e-4);
  CHECK(cfg.beta1 == 0.9);
  CHECK(cfg.beta2 == 0.999);
  CHECK(adam_config(cfg).learning_rate == 1e-4);
  CHECK(!cfg.class_weights);
  cfg.validate();
  KeyValueConfig kv;
  cfg.top_k = 3;
  cfg.aggregation = Aggregation::TopKMean;
  cfg.class_weights = std::array<double, 2>{0.7, 1.9};
  cfg.to_config(kv);
  const auto back = TrainConfig::from_config(kv);
  CHECK(back.top_k == 3);
  CHECK(back.aggregation == Aggregation::TopKMean);
  CHECK((*back.class_weights)[1] == 1.9);
  cfg.folds = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(parse_aggregation("max"), ConfigError);
}

TEST_CASE("early stopping counts epochs without strict improvement") {
  EarlyStopping es(2);
  CHECK(es.update(1, 1.0));
  CHECK(es.update(2, 0.8));
  CHECK(!es.update(3, 0.8));
  CHECK(!es.should_stop());
  CHECK(!es.update(4, 0.9));
  CHECK(es.should_stop());
  CHECK(es.best_epoch() == 2);
  CHECK(es.best_val_loss() == 0.8);
  CHECK_THROWS_AS(EarlyStopping(0), ConfigError);
}

TEST_CASE("inverse frequency class weights") {
  const auto w = inverse_frequency_weights({0, 0, 0, 1});
  CHECK(w[0] == doctest::Approx(4.0 / 6.0));
  CHECK(w[1] == doctest::Approx(2.0));
  const auto even = inverse_frequency_weights({0, 1, 1, 0});
  CHECK(even[0] == 1.0);
  CHECK(even[1] == 1.0);
  CHECK_THROWS_AS(inverse_frequency_weights({1, 1}), SingleClass);
}

TEST_CASE("patient aggregation") {
  CHECK(aggregate_values({0.2, 0.9, 0.4}, Aggregation::Mean) == doctest::Approx(0.5));
  CHECK(aggregate_values({0.2, 0.9, 0.4}, Aggregation::Median) == 0.4);
  CHECK(aggregate_values({0.2, 0.9, 0.4, 0.6}, Aggregation::Median) == doctest::Approx(0.5));
  CHECK(aggregate_values({0.2, 0.9, 0.4, 0.6}, Aggregation::TopKMean, 2) == doctest::Approx(0.75));
  CHECK(aggregate_values({0.2, 0.9}, Aggregation::TopKMean, 5) == doctest::Approx(0.55));
  CHECK_THROWS_AS(aggregate_values({}, Aggregation::Mean), EmptyGroup);

  ScoreTable tiles;
  tiles.rows = {{"t1", Task::MSI, 0.2, 1}, {"t2", Task::MSI, 0.6, 1}, {"t3", Task::MSI, 0.9, 0}};
  const std::map<std::string, std::string> owner{{"t1", "B"}, {"t2", "B"}, {"t3", "A"}};
  const auto pts = aggregate(tiles, owner);
  REQUIRE(pts.rows.size() == 2);
  CHECK(pts.rows[0].entity_id == "A");
  CHECK(pts.rows[0].score == 0.9);
  CHECK(pts.rows[1].score == doctest::Approx(0.4));
  CHECK(*pts.rows[1].label == 1);
  CHECK_THROWS_AS(aggregate(tiles, owner, Aggregation::Mean, 10, {"A", "B", "C"}), EmptyGroup);
  CHECK_THROWS_AS(aggregate(tiles, {{"t1", "B"}}), EmptyGroup);
  auto conflict = tiles;
  conflict.rows[1].label = 0;
  CHECK_THROWS_AS(aggregate(conflict, owner), InvariantViolation);
}

TEST_CASE("batches are normalized channel-first") {
  TileDataset ds;
  ds.px = 2;
  TileSample s;
  s.tile_id = "t";
  s.patient_id = "p";
  s.rgb = {0, 51, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90};
  ds.samples.push_back(s);
  ds.samples.push_back(s);
  ds.samples[1].rgb[0] = 255;
  const auto b = make_batch<double>(ds, {1, 0});
  CHECK(b.shape() == nn::Shape{2, 3, 2, 2});
  auto norm = [](double v) { return (v / 255.0 - 0.5) / 0.25; };
  CHECK(b.values()[0] == doctest::Approx(norm(255)));
  CHECK(b.values()[12] == doctest::Approx(norm(0)));
  // image 1, channel 1 (G), pixel (0, 1)
  CHECK(b.values()[12 + 4 + 1] == doctest::Approx(norm(20)));
  CHECK(b.values()[12 + 8 + 3] == doctest::Approx(norm(90)));
  CHECK_THROWS_AS(ds.labels(), InvariantViolation);
}

TEST_CASE("dataset subsets and tile ownership") {
  const auto ds = separable(4, 3, 8, 1);
  CHECK(ds.labels().size() == 12);
  CHECK(ds.tile_to_patient().at("P2_1") == "P2");
  const auto sub = ds.subset({"P3", "P0"});
  CHECK(sub.size() == 6);
  CHECK(sub.samples.front().patient_id == "P0");
}

TEST_CASE("every toy family cuts the loss on a fixed batch") {
  for (auto f : nn::kAllFamilies) {
    const auto spec = small_spec(f);
    auto model = nn::build_model<float>(spec, 3);
    model->set_training(true);
    Rng rng(5);
    std::vector<float> px(static_cast<std::size_t>(4 * 3 * spec.input_px * spec.input_px));
    for (auto& v : px) v = static_cast<float>(standard_normal(rng));
    const auto x = nn::Tensor<float>::from({4, 3, spec.input_px, spec.input_px}, px);
    AdamConfig adam;
    adam.learning_rate = 3e-3;
    const auto losses = fit_batch(*model, x, {0, 1, 0, 1}, {1.0, 1.0}, adam, 21);
    INFO(nn::family_display(f) << " " << losses.front() << " -> " << losses.back());
    for (double l : losses) REQUIRE(std::isfinite(l));
    CHECK(losses.back() <= 0.5 * losses.front());
  }
}

TEST_CASE("training separates an easy fixture") {
  auto spec = small_spec(nn::Family::ResNet18);
  spec.input_px = 32;
  const auto train_set = separable(16, 4, 32, 7);
  const auto val_set = separable(8, 4, 32, 8);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 6;
  cfg.patience = 3;
  cfg.batch_size = 8;
  std::vector<EpochLog> seen;
  auto r = train_model(spec, train_set, val_set, cfg, 1, [&](const EpochLog& e) { seen.push_back(e); });
  CHECK(seen.size() == r.log.size());
  CHECK(r.best_val_loss == doctest::Approx(std::min_element(r.log.begin(), r.log.end(), [](auto& a, auto& b) {
                                              return a.val_loss < b.val_loss;
                                            })->val_loss));
  CHECK(r.class_weights == std::array<double, 2>{1.0, 1.0});
  CHECK(evaluate_loss(*r.model, val_set, r.class_weights, 8) == doctest::Approx(r.best_val_loss).epsilon(1e-5));
  const auto scores = predict_tiles(*r.model, val_set, Task::MSI, 8);
  std::size_t correct = 0;
  for (const auto& row : scores.rows) correct += (row.score > 0.5) == (*row.label == 1);
  CHECK(static_cast<double>(correct) / static_cast<double>(scores.rows.size()) > 0.95);
  CHECK(log_csv(r.log).rfind("epoch,train_loss,val_loss,epoch_seconds\n", 0) == 0);

  // scoring in parallel changes nothing
  CHECK(predict_tiles(*r.model, val_set, Task::MSI, 8, 4).rows == scores.rows);
  // and so does the batch split, up to float rounding
  const auto split = predict_tiles(*r.model, val_set, Task::MSI, 3, 4);
  REQUIRE(split.rows.size() == scores.rows.size());
  for (std::size_t i = 0; i < split.rows.size(); ++i) {
    CHECK(split.rows[i].entity_id == scores.rows[i].entity_id);
    CHECK(std::abs(split.rows[i].score - scores.rows[i].score) < 1e-5);
  }
  // reruns are bitwise identical
  auto again = train_model(spec, train_set, val_set, cfg, 1);
  CHECK(again.log.size() == r.log.size());
  CHECK(again.best_val_loss == r.best_val_loss);
}

TEST_CASE("cross validation scores every patient once and ignores the thread count") {
  auto spec = small_spec(nn::Family::ResNet18);
  spec.input_px = 16;
  const auto data = separable(10, 2, 16, 3);
  std::map<std::string, int> labels;
  for (const auto& s : data.samples) labels[s.patient_id] = *s.label;
  const auto plan = stratified_kfold(labels, 5, 9);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.patience = 1;
  cfg.batch_size = 4;
  const auto a = cross_validate(spec, data, plan, cfg, Task::MSI, 4, 1);
  const auto b = cross_validate(spec, data, plan, cfg, Task::MSI, 4, 3);
  REQUIRE(a.folds.size() == 5);
  for (const auto& f : a.folds) CHECK(f.val_fold == (f.fold + 1) % 5);
  CHECK(a.held_out_patients.rows.size() == 10);
  for (const auto& row : a.held_out_patients.rows) {
    const auto fold = plan.assignments.at(row.entity_id);
    const auto& own = a.folds[static_cast<std::size_t>(fold)].held_out_patients.rows;
    CHECK(std::any_of(own.begin(), own.end(), [&](const ScoreRow& r) { return r == row; }));
  }
  CHECK(a.held_out_patients.rows == b.held_out_patients.rows);
  CHECK(a.best_fold == b.best_fold);
}

TEST_CASE("ensemble averaging") {
  ScoreTable x, y;
  x.rows = {{"a", Task::MSI, 0.2, 1}, {"b", Task::MSI, 0.4, 0}};
  y.rows = {{"b", Task::MSI, 0.8, 0}, {"a", Task::MSI, 0.6, 1}};
  const auto e = ensemble_average({x, y});
  CHECK(e.rows[0].score == doctest::Approx(0.4));
  CHECK(e.rows[1].score == doctest::Approx(0.6));
  y.rows[0].entity_id = "c";
  CHECK_THROWS_AS(ensemble_average({x, y}), InvariantViolation);
  CHECK_THROWS_AS(ensemble_average({}), InvariantViolation);
}

TEST_CASE("timing harness") {
  auto spec = small_spec(nn::Family::MobileNetV2);
  const auto fixture = separable(4, 2, spec.input_px, 2);
  TrainConfig cfg;
  cfg.batch_size = 4;
  const auto t = metrics::timing_harness(spec, fixture, cfg, 1);
  CHECK(t.epoch_train_seconds > 0.0);
  CHECK(t.full_prediction_seconds > 0.0);
  CHECK(t.parameter_count == nn::count_parameters(spec));
  CHECK(t.spec == spec);
  const auto p = metrics::timing_harness(spec, fixture, cfg, 1, {.train_epoch = false});
  CHECK(p.epoch_train_seconds == 0.0);
  CHECK(p.full_prediction_seconds > 0.0);
}

}  // TEST_SUITE
