// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "block_cases.hpp"
#include "support.hpp"
#include "tilebench/cli/app.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/metrics/metrics.hpp"
#include "tilebench/metrics/report.hpp"
#include "tilebench/nn/blocks.hpp"
#include "tilebench/nn/models.hpp"
#include "tilebench/preprocess/config.hpp"
#include "tilebench/preprocess/macenko.hpp"
#include "tilebench/preprocess/tiling.hpp"
#include "tilebench/tissue/tissue.hpp"
#include "tilebench/train/folds.hpp"

using namespace tilebench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks with a short reason each.
class Tally {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : "; ") + text; }
  Outcome outcome() const {
    Outcome o;
    o.pass = failures_.empty();
    o.detail = notes_;
    for (std::size_t i = 0; i < failures_.size() && i < 5; ++i) o.detail += (o.detail.empty() ? "" : "; ") + std::string("failed: ") + failures_[i];
    if (failures_.size() > 5) o.detail += "; +" + std::to_string(failures_.size() - 5) + " more";
    return o;
  }

 private:
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// 1 ---------------------------------------------------------------------------

Outcome parameter_counts() {
  Tally t;
  const std::map<nn::Family, std::pair<double, double>> table{
      {nn::Family::ResNet18, {11.18, 0.01}},   {nn::Family::ResNet50, {23.51, 0.01}},
      {nn::Family::MobileNetV2, {2.23, 0.01}}, {nn::Family::ViT, {85.8, 0.01}},
      {nn::Family::EfficientNet, {4.01, 0.02}}, {nn::Family::MobileViT, {4.94, 0.02}},
      {nn::Family::CMT, {24.98, 0.02}},        {nn::Family::SwinT, {48.84, 0.02}},
      {nn::Family::Sequencer2D, {27.27, 0.02}}};
  double worst = 0.0;
  for (const auto& [f, expect] : table) {
    const double m = static_cast<double>(nn::count_parameters(nn::reference_spec(f))) / 1e6;
    const double rel = std::abs(m - expect.first) / expect.first;
    worst = std::max(worst, rel);
    t.check(rel <= expect.second, nn::family_display(f) + " " + fmt(m, 2) + "M vs " + fmt(expect.first, 2) + "M");
  }
  t.note("worst relative error " + fmt(100 * worst, 2) + "%");
  return t.outcome();
}

// 2 ---------------------------------------------------------------------------

Outcome metric_oracles() {
  Tally t;
  Rng rng(2024);
  int mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto [s, y] = tbtest::random_instance(rng, 200);
    if (metrics::auroc(s, y) != tbtest::brute_auroc(s, y)) ++mismatches;
    if (std::abs(metrics::auprc(s, y) - tbtest::brute_auprc(s, y)) > 1e-12) ++mismatches;
  }
  t.check(mismatches == 0, std::to_string(mismatches) + " oracle mismatches");
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  t.check(std::abs(metrics::auroc(s, y) - 0.75) <= 1e-9, "fixture AUROC");
  t.check(std::abs(metrics::auprc(s, y) - 5.0 / 6.0) <= 1e-9, "fixture AUPRC");
  t.note("1000 instances, fixture AUROC " + fmt(metrics::auroc(s, y), 4) + " AUPRC " + fmt(metrics::auprc(s, y), 4));
  return t.outcome();
}

// 3 ---------------------------------------------------------------------------

Outcome bootstrap() {
  Tally t;
  Rng rng(7);
  const auto [s, y] = tbtest::normal_cohort(150, rng);
  const auto a = metrics::bootstrap_ci(s, y, metrics::Metric::AUROC, 1000, 0.95, 99, 1);
  const auto b = metrics::bootstrap_ci(s, y, metrics::Metric::AUROC, 1000, 0.95, 99, 4);
  metrics::ModelReport ra, rb;
  ra.auroc = a;
  rb.auroc = b;
  t.check(metrics::report_json(ra) == metrics::report_json(rb), "CI bytes differ across runs/threads");
  const auto p1 = metrics::bootstrap_ci(s, y, metrics::Metric::AUPRC, 1000, 0.95, 99, 1);
  const auto p2 = metrics::bootstrap_ci(s, y, metrics::Metric::AUPRC, 1000, 0.95, 99, 1);
  t.check(p1.ci_low == p2.ci_low && p1.ci_high == p2.ci_high, "AUPRC CI not reproducible");

  double w100 = 0.0, w400 = 0.0;
  for (int k = 0; k < 6; ++k) {
    const auto [s1, y1] = tbtest::normal_cohort(100, rng);
    const auto [s4, y4] = tbtest::normal_cohort(400, rng);
    const auto c1 = metrics::bootstrap_ci(s1, y1, metrics::Metric::AUROC, 1000, 0.95, k);
    const auto c4 = metrics::bootstrap_ci(s4, y4, metrics::Metric::AUROC, 1000, 0.95, k);
    w100 += c1.ci_high - c1.ci_low;
    w400 += c4.ci_high - c4.ci_low;
  }
  const double ratio = w100 / w400;
  t.check(std::abs(ratio - 2.0) <= 0.5, "width ratio " + fmt(ratio));
  t.note("width(100)/width(400) = " + fmt(ratio) + " (ideal 2)");
  return t.outcome();
}

// 4 ---------------------------------------------------------------------------

Outcome gradients() {
  Tally t;
  double worst = 0.0;
  int cases = 0;
  for (const auto& c : tbtest::block_cases()) {
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
      const auto r = c.run(mix_seed(100 + draw, c.name));
      worst = std::max(worst, r.rel_error);
      ++cases;
      t.check(r.probed > 0 && r.rel_error < 1e-4, c.name + " draw " + std::to_string(draw) + " rel " + fmt(r.rel_error, 8));
    }
  }
  std::ostringstream w;
  w << std::scientific << std::setprecision(2) << worst;
  t.note(std::to_string(cases) + " checks, worst relative error " + w.str());
  return t.outcome();
}

// 5 ---------------------------------------------------------------------------

Outcome round_trips() {
  Tally t;
  Rng rng(55);
  for (int k = 0; k < 5; ++k) {
    const auto x = tbtest::random_tensor({2, 8, 12, 3}, rng);
    t.check(nn::window_merge(nn::window_partition(x, 4), 4, 2, 8, 12).values() == x.values(), "window round trip");
    for (int shift : {1, 2, 3}) t.check(nn::cyclic_shift(nn::cyclic_shift(x, shift), -shift).values() == x.values(), "cyclic shift");
    const auto f = tbtest::random_tensor({2, 5, 8, 6}, rng);
    t.check(nn::fold_patches(nn::unfold_patches(f, 2), 2, 2, 8, 6).values() == f.values(), "unfold/fold");
  }

  double worst = 0.0;
  nn::TransformerBlock<double> block(8, 2, 16, nn::Act::GELU, rng);
  for (int k = 0; k < 5; ++k) {
    const auto x = tbtest::random_tensor({1, 7, 8}, rng);
    std::vector<std::int64_t> perm{0, 1, 2, 3, 4, 5, 6};
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
    std::vector<std::int64_t> index;
    for (auto p : perm)
      for (int c = 0; c < 8; ++c) index.push_back(p * 8 + c);
    const auto y = block.forward(x);
    const auto yp = block.forward(nn::ops::gather(x, {1, 7, 8}, index));
    for (std::size_t i = 0; i < index.size(); ++i) worst = std::max(worst, std::abs(yp.values()[i] - y.values()[index[i]]));
  }
  // the full toy ViT encoder, class token kept in front
  auto vit = nn::build_model<double>(nn::toy_spec(nn::Family::ViT), 3);
  auto& v = dynamic_cast<nn::VisionTransformer<double>&>(*vit);
  v.set_training(false);
  const auto dim = v.cls_token.dim(2);
  const auto patches = tbtest::random_tensor({1, 5, dim}, rng);
  const std::vector<std::int64_t> pp{4, 2, 0, 3, 1};
  std::vector<std::int64_t> pidx;
  for (auto p : pp)
    for (std::int64_t c = 0; c < dim; ++c) pidx.push_back(p * dim + c);
  const auto a = v.encode(v.with_class_token(patches));
  const auto b = v.encode(v.with_class_token(nn::ops::gather(patches, {1, 5, dim}, pidx)));
  for (std::int64_t c = 0; c < dim; ++c) worst = std::max(worst, std::abs(a.values()[c] - b.values()[c]));
  for (std::size_t i = 0; i < pidx.size(); ++i)
    worst = std::max(worst, std::abs(b.values()[dim + i] - a.values()[dim + pidx[i]]));
  t.check(worst < 1e-6, "equivariance error " + fmt(worst, 9));
  std::ostringstream w;
  w << std::scientific << std::setprecision(2) << worst;
  t.note("round trips exact, equivariance error " + w.str());
  return t.outcome();
}

// 6 ---------------------------------------------------------------------------

Outcome macenko() {
  Tally t;
  preprocess::PreprocessConfig cfg;
  double worst_angle = 0.0;
  Rng rng(2);
  for (const auto& s : {tbtest::unit_stains({0.65, 0.70, 0.29}, {0.20, 0.90, 0.40}),
                        preprocess::StainProfile::reference().stain_matrix,
                        tbtest::unit_stains({0.55, 0.80, 0.25}, {0.25, 0.85, 0.45})}) {
    const auto fit = preprocess::macenko_fit(tbtest::render_stains(s, tbtest::stain_concentrations(s, 96, rng), 96), cfg);
    worst_angle = std::max({worst_angle, tbtest::angle_degrees(fit.stain_matrix.col(0), s.col(0)),
                            tbtest::angle_degrees(fit.stain_matrix.col(1), s.col(1))});
  }
  t.check(worst_angle < 5.0, "angle " + fmt(worst_angle, 2));

  int idem = 0, scale = 0;
  const auto ref = preprocess::StainProfile::reference().stain_matrix;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng r(seed);
    auto conc = tbtest::stain_concentrations(ref, 96, r);
    const auto once = preprocess::macenko_normalize(tbtest::render_stains(ref, conc, 96), cfg);
    idem = std::max(idem, tbtest::max_channel_diff(once, preprocess::macenko_normalize(once, cfg)));
    for (auto& c : conc) c *= 0.8;
    scale = std::max(scale, tbtest::max_channel_diff(once, preprocess::macenko_normalize(tbtest::render_stains(ref, conc, 96), cfg)));
  }
  t.check(idem <= 2, "idempotence diff " + std::to_string(idem));
  t.check(scale <= 2, "scale diff " + std::to_string(scale));
  t.note("worst angle " + fmt(worst_angle, 2) + " deg, idempotence max diff " + std::to_string(idem) +
         ", scale (x0.8) max diff " + std::to_string(scale));
  return t.outcome();
}

// 7 ---------------------------------------------------------------------------

Outcome protocol() {
  Tally t;
  preprocess::PreprocessConfig cfg;
  struct G {
    int w, h, mpp100;
  };
  int fixtures = 0;
  for (const auto& g : {G{2048, 1536, 50}, G{2047, 1536, 50}, G{5000, 3000, 25}, G{1000, 600, 100}, G{4000, 2600, 30},
                        G{1000, 1000, 200}, G{511, 4000, 50}, G{7777, 333, 13}, G{100000, 80000, 25}, G{9999, 9999, 37}}) {
    ++fixtures;
    const auto grid = preprocess::tile_grid(g.w, g.h, g.mpp100 / 100.0, cfg);
    const std::int64_t cols = std::int64_t{g.w} * g.mpp100 / 25600, rows = std::int64_t{g.h} * g.mpp100 / 25600;
    bool ok = grid.columns == cols && grid.rows == rows && grid.origins.size() == static_cast<std::size_t>(cols * rows);
    for (std::int64_t r = 0; ok && r < rows; ++r)
      for (std::int64_t c = 0; ok && c < cols; ++c) {
        const auto& o = grid.origins[static_cast<std::size_t>(r * cols + c)];
        ok = o.first == c * 25600 / g.mpp100 && o.second == r * 25600 / g.mpp100;
      }
    t.check(ok, "grid " + std::to_string(g.w) + "x" + std::to_string(g.h) + "@" + std::to_string(g.mpp100));
  }

  std::vector<TileRecord> tiles;
  for (int i = 0; i < 1300; ++i) {
    TileRecord r;
    r.slide_id = "S";
    r.x = 512 * (i % 50);
    r.y = 512 * (i / 50);
    r.qc_pass = true;
    TissueProbs p{};
    p.fill(0.01);
    p[i < 1200 ? 8 : 7] = 0.92;
    r.tissue_probs = p;
    tiles.push_back(r);
  }
  const auto a = tissue::select_tumor_tiles(tiles, "P", 11);
  std::reverse(tiles.begin(), tiles.end());
  const auto b = tissue::select_tumor_tiles(tiles, "P", 11);
  t.check(a.size() == 500, "cap size " + std::to_string(a.size()));
  t.check(a == b, "cap not deterministic");
  t.check(tissue::select_tumor_tiles(tiles, "P", 12) != a, "seed has no effect");

  int plans = 0;
  for (const auto& [pos, neg] : {std::pair{30, 30}, std::pair{23, 61}, std::pair{12, 88}, std::pair{7, 9}}) {
    std::map<std::string, int> labels;
    for (int i = 0; i < pos + neg; ++i) labels["P" + std::to_string(i)] = i < pos;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      ++plans;
      const auto plan = train::stratified_kfold(labels, 5, seed);
      std::vector<int> np(5, 0), nn_(5, 0);
      for (const auto& [p, f] : plan.assignments) (labels.at(p) ? np : nn_)[static_cast<std::size_t>(f)]++;
      bool ok = plan.assignments.size() == labels.size();
      for (int f = 0; f < 5; ++f) ok = ok && std::abs(np[f] - pos / 5.0) <= 1.0 && std::abs(nn_[f] - neg / 5.0) <= 1.0;
      t.check(ok, "fold plan " + std::to_string(pos) + ":" + std::to_string(neg));
    }
  }
  t.note(std::to_string(fixtures) + " grid fixtures, cap 500 of 1200, " + std::to_string(plans) + " fold plans");
  return t.outcome();
}

// 8 ---------------------------------------------------------------------------

Outcome smoke() {
  Tally t;
  tbtest::TempDir dir("acceptance_smoke");
  const auto demo = dir.path() / "demo";
  const auto ini = (demo / "demo.ini").string();
  const auto start = std::chrono::steady_clock::now();
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "tilebench");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    std::string joined;
    for (std::size_t i = 1; i < args.size(); ++i) joined += (i > 1 ? " " : "") + args[i];
    t.check(code == 0, joined + " -> " + std::to_string(code) + " " + err.str());
    return code == 0;
  };
  bool ok = run({"synth-demo", "--out", demo.string(), "--patients", "60"});
  ok = ok && run({"-c", ini, "preprocess"}) && run({"-c", ini, "tissue-select"});
  std::map<std::string, double> auroc;
  for (const std::string family : {"resnet18", "sequencer2d"}) {
    if (!ok) break;
    ok = run({"-c", ini, "--model", family, "train"}) && run({"-c", ini, "--model", family, "predict"}) &&
         run({"-c", ini, "--model", family, "evaluate"});
    if (!ok) break;
    const auto rep = metrics::load_report(demo / "run" / "reports" / ("msi_" + family + ".json"));
    auroc[family] = rep.auroc ? rep.auroc->point_estimate : 0.0;
    t.check(auroc[family] > 0.90, family + " AUROC " + fmt(auroc[family]));
  }
  ok = ok && run({"-c", ini, "benchmark"}) && run({"-c", ini, "report"});
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  t.check(minutes < 10.0, "took " + fmt(minutes, 1) + " min");
  std::size_t rows = 0;
  if (ok) {
    const auto csv = read_text(demo / "run" / "summary.csv");
    rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    rows = rows > 0 ? rows - 1 : 0;
  }
  t.check(rows == 9, "summary rows " + std::to_string(rows));
  std::string note;
  for (const auto& [f, a] : auroc) note += f + " AUROC " + fmt(a) + ", ";
  t.note(note + std::to_string(rows) + " summary rows, " + fmt(minutes, 1) + " min");
  return t.outcome();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 parameter counts", parameter_counts}, {"2 metric oracles", metric_oracles},
      {"3 bootstrap", bootstrap},               {"4 block gradients", gradients},
      {"5 structural round trips", round_trips}, {"6 macenko", macenko},
      {"7 pipeline protocol", protocol},        {"8 end-to-end smoke", smoke}};
  const std::map<std::string, double> budget{{"1 parameter counts", 1.0},  {"2 metric oracles", 30.0},
                                             {"3 bootstrap", 60.0},        {"4 block gradients", 300.0},
                                             {"6 macenko", 60.0},          {"8 end-to-end smoke", 600.0}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (auto it = budget.find(name); it != budget.end() && secs >= it->second) {
      o.pass = false;
      o.detail += "; over the " + fmt(it->second, 0) + " s budget";
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << name << "] " << fmt(secs, 2) << " s  " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " of 8 criteria failed" : std::string("all 8 criteria passed")) << "\n";
  return failed ? 1 : 0;
}
