#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "support.hpp"
#include "tilebench/cli/app.hpp"
#include "tilebench/cli/run_config.hpp"
#include "tilebench/core/config.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/core/manifest.hpp"
#include "tilebench/metrics/report.hpp"

using namespace tilebench;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "tilebench");
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool empty_or_missing(const fs::path& dir) { return !fs::exists(dir) || fs::is_empty(dir); }

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes by error kind") {
  CHECK(cli::exit_code(ErrorKind::Config) == 2);
  CHECK(cli::exit_code(ErrorKind::Input) == 3);
  CHECK(cli::exit_code(ErrorKind::Numeric) == 4);
}

TEST_CASE("help exits cleanly") {
  const auto r = invoke({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("synth-demo") != std::string::npos);
  CHECK(r.out.find("tissue-select") != std::string::npos);
}

TEST_CASE("bad arguments and overrides are configuration errors") {
  tbtest::TempDir dir("cli_args");
  CHECK(invoke({"--no-such-flag"}).code == 2);
  CHECK(invoke({"train", "--threads", "0"}).code == 2);
  const auto out = (dir.path() / "out").string();
  auto r = invoke({"--set", "novalue", "--output-dir", out, "report"});
  CHECK(r.code == 2);
  CHECK(line_count(r.err) == 1);
  CHECK(invoke({"--set", "train.learning_rate=-1", "--output-dir", out, "report"}).code == 2);
  CHECK(invoke({"--model", "alexnet", "--output-dir", out, "report"}).code == 2);
  CHECK(invoke({"-c", (dir.path() / "absent.ini").string(), "report"}).code == 2);
  CHECK(empty_or_missing(out));
}

TEST_CASE("a missing manifest stops before writing anything") {
  tbtest::TempDir dir("cli_manifest");
  const auto out = dir.path() / "run";
  const auto r = invoke({"--output-dir", out.string(), "--manifest", (dir.path() / "none.jsonl").string(), "preprocess"});
  INFO(r.err);
  CHECK(r.code == 2);
  CHECK(line_count(r.err) == 1);
  CHECK(empty_or_missing(out));
  // no manifest configured at all
  CHECK(invoke({"--output-dir", out.string(), "preprocess"}).code == 2);
  CHECK(empty_or_missing(out));
}

TEST_CASE("evaluate reports the four point fixture") {
  tbtest::TempDir dir("cli_eval");
  const auto scores = dir.path() / "scores.csv";
  write_text_atomic(scores, "entity_id,task,score,label\nA,MSI,0.1,0\nB,MSI,0.4,0\nC,MSI,0.35,1\nD,MSI,0.8,1\n");
  const auto out = dir.path() / "run";
  const auto r = invoke({"--output-dir", out.string(), "--model", "resnet18", "--seed", "3", "--set",
                         "metrics.n_bootstrap=200", "evaluate", "--scores", scores.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto rep = metrics::load_report(out / "reports" / "msi_resnet18.json");
  REQUIRE(rep.auroc);
  REQUIRE(rep.auprc);
  CHECK(rep.auroc->point_estimate == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(rep.auprc->point_estimate == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(rep.auroc->n_bootstrap == 200);
  CHECK(rep.seed == 3);
  CHECK(rep.auroc->contains_point());
  CHECK(fs::exists(out / "meta" / "evaluate_msi_resnet18.json"));
  CHECK(!fs::is_empty(out / "curves"));

  // same seed, same bytes
  const auto again = dir.path() / "run2";
  invoke({"--output-dir", again.string(), "--model", "resnet18", "--seed", "3", "--set", "metrics.n_bootstrap=200",
          "evaluate", "--scores", scores.string()});
  CHECK(read_text(out / "reports" / "msi_resnet18.json") == read_text(again / "reports" / "msi_resnet18.json"));

  CHECK(invoke({"--output-dir", out.string(), "evaluate", "--scores", (dir.path() / "x.csv").string()}).code == 2);
  write_text_atomic(dir.path() / "bad.csv", "entity_id,task,score,label\nA,MSI,zero,0\n");
  CHECK(invoke({"--output-dir", out.string(), "evaluate", "--scores", (dir.path() / "bad.csv").string()}).code == 3);
  write_text_atomic(dir.path() / "one.csv", "entity_id,task,score,label\nA,MSI,0.2,1\nB,MSI,0.3,1\n");
  CHECK(invoke({"--output-dir", out.string(), "evaluate", "--scores", (dir.path() / "one.csv").string()}).code == 3);
}

TEST_CASE("later stages need the earlier artifacts") {
  tbtest::TempDir dir("cli_order");
  const auto out = dir.path() / "run";
  CHECK(invoke({"--output-dir", out.string(), "--model", "resnet18", "predict"}).code != 0);
  CHECK(invoke({"--output-dir", out.string(), "--model", "resnet18", "evaluate"}).code == 3);
}

TEST_CASE("seed precedence") {
  KeyValueConfig kv;
  CHECK(cli::RunConfig::from(kv, ".", std::nullopt).seed == 0);
  CHECK(cli::RunConfig::from(kv, ".", 17).seed == 17);
  kv.set("run.seed", 5);
  CHECK(cli::RunConfig::from(kv, ".", 17).seed == 5);
  CHECK(cli::parse_seed("18446744073709551615") == 18446744073709551615ULL);
  CHECK_THROWS_AS(cli::parse_seed("-1"), ConfigError);
  CHECK_THROWS_AS(cli::parse_seed("12x"), ConfigError);

  ::setenv(cli::kSeedEnv, "41", 1);
  CHECK(cli::seed_from_env() == 41u);
  ::setenv(cli::kSeedEnv, "oops", 1);
  CHECK_THROWS_AS(cli::seed_from_env(), ConfigError);
  ::unsetenv(cli::kSeedEnv);
  CHECK(!cli::seed_from_env());
}

TEST_CASE("run config resolves paths against the config file") {
  tbtest::TempDir dir("cli_cfg");
  const auto kv = KeyValueConfig::parse("[run]\ntask = BRAF\noutput_dir = out\n[paths]\nmanifest = m.jsonl\n");
  const auto cfg = cli::RunConfig::from(kv, dir.path(), std::nullopt);
  CHECK(cfg.task == Task::BRAF);
  CHECK(cfg.output_dir == dir.path() / "out");
  CHECK(cfg.manifest == dir.path() / "m.jsonl");
  CHECK(cfg.model_key(nn::Family::SwinT) == "braf_" + nn::family_key(nn::Family::SwinT));
  CHECK_THROWS_AS(cfg.require_manifest(), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from(KeyValueConfig::parse("[run]\ntask = KRAS\n"), dir.path(), std::nullopt),
                  ConfigError);
}

TEST_CASE("synth-demo writes a cohort and a runnable config") {
  tbtest::TempDir dir("cli_synth");
  const auto r = invoke({"--seed", "2", "synth-demo", "--out", (dir.path() / "demo").string(), "--patients", "6",
                         "--tumor-tiles", "1"});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto m = load_manifest(dir.path() / "demo" / "manifest.jsonl");
  CHECK(m.slides.size() == 6);
  validate(m);
  for (const auto& s : m.slides) CHECK(fs::exists(dir.path() / "demo" / s.image_path));
  const auto ini = KeyValueConfig::load(dir.path() / "demo" / "demo.ini");
  CHECK(ini.get_double("train.learning_rate", 0) == 1e-4);
  CHECK(ini.get_int("run.seed", -1) == 2);
  const auto cfg = cli::RunConfig::from(ini, dir.path() / "demo", std::nullopt);
  cfg.require_manifest();
  CHECK(cfg.benchmark_trained.size() == 2);
  CHECK(cfg.benchmark_forward_only.size() == 7);
  CHECK(invoke({"synth-demo", "--out", (dir.path() / "x").string(), "--tumor-tiles", "9"}).code == 2);
}

}  // TEST_SUITE
