#include "tilebench/cli/app.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tilebench/cli/run_config.hpp"
#include "tilebench/cli/synthetic.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/core/manifest.hpp"
#include "tilebench/core/score_table.hpp"
#include "tilebench/metrics/curves.hpp"
#include "tilebench/metrics/report.hpp"
#include "tilebench/metrics/timing.hpp"
#include "tilebench/nn/checkpoint.hpp"
#include "tilebench/preprocess/stage.hpp"
#include "tilebench/train/aggregate.hpp"
#include "tilebench/train/cross_validation.hpp"

namespace tilebench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Input: return kExitInput;
    case ErrorKind::Numeric: return kExitNumeric;
  }
  return kExitInput;
}

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string seed;
  int threads = 0;
  std::string model;
  std::string task;
  std::string output_dir;
  std::string manifest;
  // predict
  bool ensemble = false;
  // evaluate
  std::string scores;
  // synth-demo
  std::string demo_dir;
  int demo_patients = 60;
  int demo_tumor_tiles = 4;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// Wall-clock facts of one invocation; kept apart from the reproducible outputs.
class MetaSidecar {
 public:
  MetaSidecar(std::string name, const RunConfig& cfg)
      : name_(std::move(name)), cfg_(cfg), started_(utc_now()), start_(std::chrono::steady_clock::now()) {}

  void finish(json extra = json::object()) const {
    json j;
    j["subcommand"] = name_;
    j["seed"] = cfg_.seed;
    j["threads"] = cfg_.threads;
    j["started_at"] = started_;
    j["finished_at"] = utc_now();
    j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json config = json::object();
    for (const auto& [k, v] : cfg_.source.entries()) config[k] = v;
    j["config"] = config;
    j["details"] = std::move(extra);
    fs::create_directories(cfg_.meta_dir());
    write_text_atomic(cfg_.meta_dir() / (name_ + ".json"), j.dump(2) + "\n");
  }

 private:
  std::string name_;
  const RunConfig& cfg_;
  std::string started_;
  std::chrono::steady_clock::time_point start_;
};

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw IoError(what + " " + path.string() + " not found; run the earlier stage first");
}

RunConfig load_run_config(const Options& o) {
  KeyValueConfig kv;
  fs::path base = fs::current_path();
  if (!o.config.empty()) {
    if (!fs::is_regular_file(o.config)) throw ConfigError("config file " + o.config + " does not exist");
    kv = KeyValueConfig::load(o.config);
    base = fs::absolute(o.config).parent_path();
  }
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    kv.set(std::string(trim(s.substr(0, eq))), std::string(trim(s.substr(eq + 1))));
  }
  // Flags are relative to the working directory, config values to the config file.
  const fs::path cwd = fs::current_path();
  if (!o.seed.empty()) kv.set("run.seed", std::to_string(parse_seed(o.seed)));
  if (o.threads > 0) kv.set("run.threads", o.threads);
  if (!o.model.empty()) kv.set("model.family", o.model);
  if (!o.task.empty()) kv.set("run.task", o.task);
  if (!o.output_dir.empty()) kv.set("run.output_dir", (cwd / o.output_dir).lexically_normal().string());
  if (!o.manifest.empty()) kv.set("paths.manifest", (cwd / o.manifest).lexically_normal().string());
  return RunConfig::from(kv, base, seed_from_env());
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// --- preprocess ---------------------------------------------------------

void cmd_preprocess(const RunConfig& cfg, std::ostream& out) {
  cfg.require_manifest();
  MetaSidecar meta("preprocess", cfg);
  const CohortManifest manifest = load_manifest(cfg.manifest);
  validate(manifest);
  const CohortManifest selected = select_one_slide_per_patient(manifest, cfg.seed);
  const auto result = preprocess::run_preprocess(selected, cfg.preprocess, cfg.slides_dir, cfg.tiles_dir(), cfg.threads);
  save_manifest(cfg.selected_manifest(), selected);
  save_tiles(cfg.tile_index(), result.tiles);
  std::string csv = "slide_id,tiles_total,tiles_kept,rejected_edges,rejected_stain\n";
  std::size_t kept = 0;
  for (const auto& s : result.slides) {
    csv += s.slide_id + "," + std::to_string(s.tiles_total) + "," + std::to_string(s.tiles_kept) + "," +
           std::to_string(s.rejected_edges) + "," + std::to_string(s.rejected_stain) + "\n";
    kept += s.tiles_kept;
  }
  write_text_atomic(cfg.output_dir / "preprocess_slides.csv", csv);
  out << "preprocess: " << selected.slides.size() << " slides, " << result.tiles.size() << " tiles, " << kept
      << " passed QC\n";
  meta.finish({{"slides", selected.slides.size()}, {"tiles", result.tiles.size()}, {"kept", kept}});
}

// --- tissue-select ------------------------------------------------------

void cmd_tissue_select(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.selected_manifest(), "selected manifest");
  require_file(cfg.tile_index(), "tile index");
  MetaSidecar meta("tissue-select", cfg);
  const CohortManifest manifest = load_manifest(cfg.selected_manifest());
  auto tiles = tissue::classify_tiles(load_tiles(cfg.tile_index()), cfg.scorer, cfg.threads, cfg.tiles_dir());
  const auto report = tissue::select_cohort(manifest, std::move(tiles), cfg.seed, cfg.gate);
  save_tiles(cfg.selected_tiles(), report.tiles);
  std::string excluded;
  for (const auto& p : report.excluded_patients) excluded += p + "\n";
  write_text_atomic(cfg.output_dir / "excluded_patients.txt", excluded);
  std::size_t selected = 0;
  for (const auto& t : report.tiles) selected += t.selected ? 1 : 0;
  out << "tissue-select: " << selected << " tumor tiles selected, " << report.excluded_patients.size()
      << " patients excluded (no tumor tiles)\n";
  meta.finish({{"selected_tiles", selected}, {"excluded_patients", report.excluded_patients.size()}});
}

// --- train --------------------------------------------------------------

train::TileDataset cohort_dataset(const RunConfig& cfg, int px) {
  require_file(cfg.selected_manifest(), "selected manifest");
  require_file(cfg.selected_tiles(), "selected tile index");
  const auto manifest = load_manifest(cfg.selected_manifest());
  auto ds = train::load_dataset(manifest, load_tiles(cfg.selected_tiles()), cfg.tiles_dir(), px);
  if (ds.size() == 0) throw InvariantViolation("no selected tumor tiles to work on");
  return ds;
}

std::map<std::string, int> dataset_patient_labels(const train::TileDataset& ds) {
  std::map<std::string, int> out;
  for (const auto& s : ds.samples) {
    if (!s.label) throw InvariantViolation("patient " + s.patient_id + " is unlabeled");
    out[s.patient_id] = *s.label;
  }
  return out;
}

KeyValueConfig effective_config(const RunConfig& cfg) {
  KeyValueConfig kv = cfg.source;
  kv.set("run.seed", std::to_string(cfg.seed));
  kv.set("run.task", std::string(task_name(cfg.task)));
  kv.merge_section(cfg.model.to_config(), "model");
  cfg.train.to_config(kv);
  return kv;
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const nn::Family family = cfg.model.family;
  MetaSidecar meta("train_" + cfg.model_key(family), cfg);
  const auto ds = cohort_dataset(cfg, cfg.model.input_px);
  const auto labels = dataset_patient_labels(ds);
  const auto plan = train::stratified_kfold(labels, cfg.train.folds, cfg.seed);
  const fs::path dir = cfg.train_dir(family);
  fs::create_directories(dir);
  out << "train: " << nn::family_display(family) << " on " << ds.size() << " tiles of " << labels.size()
      << " patients, " << plan.k << " folds\n";
  const auto cv = train::cross_validate(cfg.model, ds, plan, cfg.train, cfg.task, cfg.seed, cfg.threads,
                                        [&](int fold, const train::EpochLog& e) {
                                          out << "  fold " << fold << " epoch " << e.epoch << " train_loss "
                                              << fixed(e.train_loss, 4) << " val_loss " << fixed(e.val_loss, 4)
                                              << " (" << fixed(e.epoch_seconds, 1) << " s)\n"
                                              << std::flush;
                                        });
  std::string folds_csv = "patient_id,label,fold\n";
  for (const auto& [p, f] : plan.assignments) folds_csv += p + "," + std::to_string(labels.at(p)) + "," + std::to_string(f) + "\n";
  write_text_atomic(dir / "folds.csv", folds_csv);
  json summary;
  summary["task"] = std::string(task_name(cfg.task));
  summary["model"] = nn::family_key(family);
  summary["k"] = plan.k;
  summary["seed"] = cfg.seed;
  summary["best_fold"] = cv.best_fold;
  summary["folds"] = json::array();
  ScoreTable held_out_tiles;
  for (const auto& r : cv.folds) {
    nn::save_checkpoint(dir / ("fold" + std::to_string(r.fold) + ".tbck"), *r.train.model);
    write_text_atomic(dir / ("fold" + std::to_string(r.fold) + "_log.csv"), train::log_csv(r.train.log));
    summary["folds"].push_back({{"fold", r.fold},
                                {"val_fold", r.val_fold},
                                {"best_epoch", r.train.best_epoch},
                                {"epochs_run", r.train.log.size()},
                                {"best_val_loss", r.train.best_val_loss},
                                {"val_auroc", finite_or_null(r.val_auroc)},
                                {"class_weights", r.train.class_weights}});
    held_out_tiles.rows.insert(held_out_tiles.rows.end(), r.held_out_tiles.rows.begin(), r.held_out_tiles.rows.end());
  }
  std::sort(held_out_tiles.rows.begin(), held_out_tiles.rows.end(),
            [](const ScoreRow& a, const ScoreRow& b) { return a.entity_id < b.entity_id; });
  save_score_table(dir / "heldout_tile_scores.csv", held_out_tiles);
  save_score_table(dir / "heldout_patient_scores.csv", cv.held_out_patients);
  write_text_atomic(dir / "cv_summary.json", summary.dump(2) + "\n");
  write_text_atomic(dir / "run_config.ini", effective_config(cfg).to_string());
  for (const auto& r : cv.folds) {
    out << "  fold " << r.fold << ": best epoch " << r.train.best_epoch << ", val loss " << fixed(r.train.best_val_loss, 4)
        << ", val AUROC " << (std::isfinite(r.val_auroc) ? fixed(r.val_auroc, 3) : std::string("n/a")) << "\n";
  }
  out << "  selected fold " << cv.best_fold << "; held-out patient scores in " << (dir / "heldout_patient_scores.csv").string()
      << "\n";
  meta.finish({{"best_fold", cv.best_fold}});
}

// --- predict ------------------------------------------------------------

void cmd_predict(const RunConfig& cfg, bool ensemble, std::ostream& out) {
  const nn::Family family = cfg.model.family;
  const fs::path dir = cfg.train_dir(family);
  require_file(dir / "cv_summary.json", "cross-validation summary");
  require_file(dir / "folds.csv", "fold plan");
  MetaSidecar meta("predict_" + cfg.model_key(family), cfg);
  const json summary = json::parse(read_text(dir / "cv_summary.json"));
  const int k = summary.at("k").get<int>();
  const int best = summary.at("best_fold").get<int>();
  std::map<std::string, int> fold_of;
  {
    std::istringstream in(read_text(dir / "folds.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto parts = split(line, ',');
      if (parts.size() != 3) throw ParseError("folds.csv: malformed line '" + line + "'");
      fold_of[parts[0]] = std::stoi(parts[2]);
    }
  }
  std::map<int, std::unique_ptr<nn::Model<float>>> models;
  auto model = [&](int f) -> nn::Model<float>& {
    auto& m = models[f];
    if (!m) m = nn::load_checkpoint<float>(dir / ("fold" + std::to_string(f) + ".tbck"));
    return *m;
  };
  const int px = model(best).spec().input_px;
  const auto ds = cohort_dataset(cfg, px);
  // Cohort patients are scored by the fold model that held them out; any
  // other patient by the selected fold, or by the mean over all folds.
  std::vector<std::string> unseen;
  std::map<int, std::vector<std::string>> by_fold;
  std::set<std::string> patients;
  for (const auto& s : ds.samples) patients.insert(s.patient_id);
  for (const auto& p : patients) {
    auto it = fold_of.find(p);
    if (it != fold_of.end()) {
      by_fold[it->second].push_back(p);
    } else {
      unseen.push_back(p);
    }
  }
  ScoreTable tiles;
  for (const auto& [f, ps] : by_fold) {
    const auto part = train::predict_tiles(model(f), ds.subset(ps), cfg.task, cfg.train.batch_size, cfg.threads);
    tiles.rows.insert(tiles.rows.end(), part.rows.begin(), part.rows.end());
  }
  if (!unseen.empty()) {
    const auto subset = ds.subset(unseen);
    if (ensemble) {
      std::vector<ScoreTable> members;
      for (int f = 0; f < k; ++f) members.push_back(train::predict_tiles(model(f), subset, cfg.task, cfg.train.batch_size, cfg.threads));
      const auto mean = train::ensemble_average(members);
      tiles.rows.insert(tiles.rows.end(), mean.rows.begin(), mean.rows.end());
    } else {
      const auto part = train::predict_tiles(model(best), subset, cfg.task, cfg.train.batch_size, cfg.threads);
      tiles.rows.insert(tiles.rows.end(), part.rows.begin(), part.rows.end());
    }
  }
  std::sort(tiles.rows.begin(), tiles.rows.end(), [](const ScoreRow& a, const ScoreRow& b) { return a.entity_id < b.entity_id; });
  const auto patients_table = train::aggregate(tiles, ds.tile_to_patient(), cfg.train.aggregation, cfg.train.top_k,
                                               std::vector<std::string>(patients.begin(), patients.end()));
  const fs::path pdir = cfg.predict_dir(family);
  fs::create_directories(pdir);
  save_score_table(pdir / "tile_scores.csv", tiles);
  save_score_table(pdir / "patient_scores.csv", patients_table);
  out << "predict: " << tiles.rows.size() << " tiles, " << patients_table.rows.size() << " patients ("
      << patients.size() - unseen.size() << " scored by their held-out fold, " << unseen.size() << " by "
      << (ensemble ? "the fold ensemble" : "fold " + std::to_string(best)) << ")\n";
  meta.finish({{"tiles", tiles.rows.size()}, {"patients", patients_table.rows.size()}, {"unseen", unseen.size()}});
}

// --- evaluate -----------------------------------------------------------

std::string ci_caption(const metrics::MetricReport& m) {
  return std::string(metrics::metric_name(m.metric)) + " " + fixed(m.point_estimate, 3) + " (" +
         fixed(100.0 * m.level, 0) + "% CI " + fixed(m.ci_low, 3) + "-" + fixed(m.ci_high, 3) + ", " +
         std::to_string(m.n_bootstrap) + " bootstrap resamples)";
}

void cmd_evaluate(const RunConfig& cfg, const std::string& scores_flag, std::ostream& out) {
  const nn::Family family = cfg.model.family;
  fs::path path;
  if (!scores_flag.empty()) {
    path = scores_flag;
    if (!fs::is_regular_file(path)) throw ConfigError("score file " + path.string() + " does not exist");
  } else {
    path = cfg.predict_dir(family) / "patient_scores.csv";
    require_file(path, "patient score file");
  }
  const ScoreTable table = load_score_table(path);
  if (table.rows.empty()) throw InvariantViolation("score file " + path.string() + " is empty");
  const Task task = table.rows.front().task;
  for (const auto& r : table.rows) {
    if (r.task != task) throw InvariantViolation("score file mixes tasks");
  }
  RunConfig local = cfg;
  local.task = task;
  MetaSidecar meta("evaluate_" + local.model_key(family), local);
  const auto scores = table.scores();
  const auto labels = table.labels();
  metrics::ModelReport rep;
  rep.task = task;
  rep.family = family;
  rep.mode = "trained";
  rep.seed = cfg.seed;
  rep.parameter_count = nn::count_parameters(cfg.model);
  rep.reference_parameter_count = nn::count_parameters(nn::reference_spec(family, cfg.model.num_classes));
  rep.auroc = metrics::bootstrap_ci(scores, labels, metrics::Metric::AUROC, cfg.n_bootstrap, cfg.level, cfg.seed, cfg.threads);
  rep.auprc = metrics::bootstrap_ci(scores, labels, metrics::Metric::AUPRC, cfg.n_bootstrap, cfg.level, cfg.seed, cfg.threads);
  fs::create_directories(local.reports_dir());
  metrics::save_report(local.reports_dir() / (local.model_key(family) + ".json"), rep);
  metrics::export_curves(scores, labels, local.curves_dir(), local.model_key(family), ci_caption(*rep.auroc),
                         ci_caption(*rep.auprc));
  out << "evaluate: " << nn::family_display(family) << " " << task_name(task) << ", " << table.rows.size()
      << " patients\n  " << ci_caption(*rep.auroc) << "\n  " << ci_caption(*rep.auprc) << "\n";
  meta.finish({{"auroc", rep.auroc->point_estimate}, {"auprc", rep.auprc->point_estimate}});
}

// --- benchmark ----------------------------------------------------------

void cmd_benchmark(const RunConfig& cfg, std::ostream& out) {
  MetaSidecar meta("benchmark_" + std::string(task_name(cfg.task)), cfg);
  std::vector<std::pair<nn::Family, bool>> plan;
  std::set<nn::Family> seen;
  for (auto f : cfg.benchmark_trained) {
    if (seen.insert(f).second) plan.emplace_back(f, true);
  }
  for (auto f : cfg.benchmark_forward_only) {
    if (seen.insert(f).second) plan.emplace_back(f, false);
  }
  if (plan.empty()) throw ConfigError("benchmark has no families to time");
  std::map<int, train::TileDataset> by_px;
  fs::create_directories(cfg.benchmark_dir());
  json details = json::array();
  for (const auto& [family, trained] : plan) {
    const nn::ArchitectureSpec spec = family == cfg.model.family ? cfg.model : nn::toy_spec(family, cfg.model.num_classes);
    auto it = by_px.find(spec.input_px);
    if (it == by_px.end()) it = by_px.emplace(spec.input_px, cohort_dataset(cfg, spec.input_px)).first;
    metrics::TimingOptions opt;
    opt.train_epoch = trained;
    opt.threads = cfg.threads;
    metrics::ModelReport rep;
    rep.task = cfg.task;
    rep.family = family;
    rep.mode = trained ? "trained" : "forward_only";
    rep.seed = cfg.seed;
    rep.timing = metrics::timing_harness(spec, it->second, cfg.train, cfg.seed, opt);
    rep.parameter_count = rep.timing->parameter_count;
    rep.reference_parameter_count = nn::count_parameters(nn::reference_spec(family, spec.num_classes));
    metrics::save_report(cfg.benchmark_dir() / (cfg.model_key(family) + "_timing.json"), rep);
    out << "benchmark: " << std::left << std::setw(14) << nn::family_display(family) << " " << std::setw(12) << rep.mode
        << " params " << std::setw(8) << rep.parameter_count << " epoch " << fixed(rep.timing->epoch_train_seconds, 2)
        << " s, predict " << fixed(rep.timing->full_prediction_seconds, 2) << " s (" << it->second.size() << " tiles)\n"
        << std::flush;
    details.push_back({{"model", nn::family_key(family)}, {"mode", rep.mode}});
  }
  meta.finish({{"families", details}});
}

// --- report -------------------------------------------------------------

std::vector<fs::path> json_files(const fs::path& dir, const std::string& suffix) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
  std::map<std::pair<int, int>, metrics::ModelReport> rows;
  auto key = [](const metrics::ModelReport& r) { return std::pair(static_cast<int>(r.task), static_cast<int>(r.family)); };
  for (const auto& p : json_files(cfg.reports_dir(), ".json")) {
    auto r = metrics::load_report(p);
    rows[key(r)] = r;
  }
  for (const auto& p : json_files(cfg.benchmark_dir(), "_timing.json")) {
    auto r = metrics::load_report(p);
    auto it = rows.find(key(r));
    if (it == rows.end()) {
      rows[key(r)] = r;
    } else {
      it->second.timing = r.timing;
    }
  }
  if (rows.empty()) throw IoError("no evaluation or benchmark reports under " + cfg.output_dir.string());
  MetaSidecar meta("report", cfg);
  std::vector<metrics::ModelReport> reports;
  for (auto& [_, r] : rows) reports.push_back(r);
  const auto table = metrics::summary_table(reports);
  write_text_atomic(cfg.output_dir / "summary.csv", metrics::summary_csv(reports));
  write_text_atomic(cfg.output_dir / "summary.txt", table);
  write_text_atomic(cfg.output_dir / "timing.csv", metrics::timing_csv(reports));
  out << table;
  meta.finish({{"rows", reports.size()}});
}

// --- synth-demo ---------------------------------------------------------

void cmd_synth_demo(const Options& o, std::ostream& out) {
  if (o.demo_dir.empty()) throw ConfigError("synth-demo needs --out");
  SyntheticCohortOptions opt;
  opt.patients = o.demo_patients;
  opt.tumor_tiles = o.demo_tumor_tiles;
  opt.seed = o.seed.empty() ? seed_from_env().value_or(0) : parse_seed(o.seed);
  if (!o.task.empty()) opt.task = parse_task(o.task);
  const fs::path dir = o.demo_dir;
  const auto manifest = write_synthetic_cohort(dir, opt);
  std::string forward_only;
  for (auto f : nn::kAllFamilies) {
    if (f == nn::Family::ResNet18 || f == nn::Family::Sequencer2D) continue;
    forward_only += (forward_only.empty() ? "" : ",") + nn::family_key(f);
  }
  std::ostringstream ini;
  ini << "[run]\ntask = " << task_name(opt.task) << "\nseed = " << opt.seed << "\nthreads = 1\noutput_dir = run\n\n"
      << "[paths]\nmanifest = manifest.jsonl\n\n"
      << "[train]\nlearning_rate = 0.0001\nmax_epochs = 8\npatience = 3\nbatch_size = 16\nfolds = 5\n\n"
      << "[metrics]\nn_bootstrap = 1000\nlevel = 0.95\n\n"
      << "[benchmark]\ntrained = resnet18,sequencer2d\nforward_only = " << forward_only << "\n";
  write_text_atomic(dir / "demo.ini", ini.str());
  out << "synth-demo: " << manifest.slides.size() << " slides (" << count_labels(manifest).ratio()
      << " positive:negative) and demo.ini written to " << dir.string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tile-based biomarker prediction benchmark"};
  app.name(args.empty() ? "tilebench" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config, "Run configuration file");
  app.add_option("--set", o.sets, "Override a config entry, section.key=value (repeatable)");
  app.add_option("--seed", o.seed, std::string("Global seed (default: run.seed, then $") + kSeedEnv + ")");
  app.add_option("--threads", o.threads, "Worker threads for every stage")->check(CLI::PositiveNumber);
  app.add_option("--model", o.model, "Model family, e.g. resnet18");
  app.add_option("--task", o.task, "MSI, BRAF or CIMP");
  app.add_option("--output-dir", o.output_dir, "Output directory");
  app.add_option("--manifest", o.manifest, "Cohort manifest (JSON Lines)");

  auto* preprocess = app.add_subcommand("preprocess", "Tessellate, filter and stain-normalize slides");
  auto* tissue = app.add_subcommand("tissue-select", "Classify tiles and keep tumor tiles");
  auto* train = app.add_subcommand("train", "Cross-validated training of one model family");
  auto* predict = app.add_subcommand("predict", "Tile and patient scores from trained fold models");
  predict->add_flag("--ensemble", o.ensemble, "Average all fold models for patients outside the fold plan");
  auto* evaluate = app.add_subcommand("evaluate", "AUROC/AUPRC with bootstrap CIs and curves");
  evaluate->add_option("--scores", o.scores, "Patient score file (default: the predict output)");
  auto* benchmark = app.add_subcommand("benchmark", "Epoch and prediction timing per family");
  auto* report = app.add_subcommand("report", "Collate reports into the summary table");
  auto* synth = app.add_subcommand("synth-demo", "Write a synthetic demo cohort and config");
  synth->add_option("--out", o.demo_dir, "Directory for the cohort")->required();
  synth->add_option("--patients", o.demo_patients, "Number of patients")->check(CLI::Range(2, 100000));
  synth->add_option("--tumor-tiles", o.demo_tumor_tiles, "Tumor tiles per slide")->check(CLI::Range(1, 5));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.get_name() << ": error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (synth->parsed()) {
      cmd_synth_demo(o, out);
      return kExitOk;
    }
    const RunConfig cfg = load_run_config(o);
    if (preprocess->parsed()) cmd_preprocess(cfg, out);
    if (tissue->parsed()) cmd_tissue_select(cfg, out);
    if (train->parsed()) cmd_train(cfg, out);
    if (predict->parsed()) cmd_predict(cfg, o.ensemble, out);
    if (evaluate->parsed()) cmd_evaluate(cfg, o.scores, out);
    if (benchmark->parsed()) cmd_benchmark(cfg, out);
    if (report->parsed()) cmd_report(cfg, out);
    return kExitOk;
  } catch (const Error& e) {
    err << app.get_name() << ": error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << app.get_name() << ": error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << app.get_name() << ": internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tilebench::cli
