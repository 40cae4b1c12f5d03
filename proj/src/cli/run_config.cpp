#include "tilebench/cli/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "tilebench/core/errors.hpp"

namespace tilebench::cli {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& text) {
  if (text.empty()) return {};
  fs::path p = text;
  return p.is_relative() ? base / p : p;
}

std::vector<nn::Family> families(const KeyValueConfig& cfg, const std::string& key,
                                 const std::vector<std::string>& fallback) {
  std::vector<nn::Family> out;
  for (const auto& name : cfg.get_strings(key, fallback)) out.push_back(nn::parse_family(name));
  return out;
}

}  // namespace

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') throw ConfigError("invalid seed '" + text + "'");
  return v;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv(kSeedEnv);
  if (!v || !*v) return std::nullopt;
  return parse_seed(v);
}

RunConfig RunConfig::from(const KeyValueConfig& cfg, const fs::path& base_dir, std::optional<std::uint64_t> env_seed) {
  RunConfig r;
  r.source = cfg;
  try {
    r.task = parse_task(cfg.get_string("run.task", "MSI"));
  } catch (const ParseError& e) {
    throw ConfigError(std::string("run.task: ") + e.what());
  }
  if (auto s = cfg.raw("run.seed")) {
    r.seed = parse_seed(*s);
  } else {
    r.seed = env_seed.value_or(0);
  }
  r.threads = static_cast<int>(cfg.get_int("run.threads", 1));
  if (r.threads < 1) throw ConfigError("run.threads must be >= 1");
  r.output_dir = resolve(base_dir, cfg.get_string("run.output_dir", "tilebench_out"));
  r.manifest = resolve(base_dir, cfg.get_string("paths.manifest", ""));
  r.slides_dir = resolve(base_dir, cfg.get_string("paths.slides_dir", ""));
  if (r.slides_dir.empty() && !r.manifest.empty()) r.slides_dir = r.manifest.parent_path();
  r.tissue_scores = resolve(base_dir, cfg.get_string("paths.tissue_scores", ""));
  r.preprocess = preprocess::PreprocessConfig::from_config(cfg);
  const auto scorer = cfg.get_string("tissue.scorer", r.tissue_scores.empty() ? "baseline" : "external");
  if (scorer == "baseline") {
    r.scorer = tissue::TissueScorer::baseline();
  } else if (scorer == "external") {
    if (r.tissue_scores.empty()) throw ConfigError("tissue.scorer = external needs paths.tissue_scores");
    r.scorer = tissue::TissueScorer::external(r.tissue_scores);
  } else {
    throw ConfigError("unknown tissue.scorer '" + scorer + "'");
  }
  const auto cap = cfg.get_int("tissue.cap", 500);
  if (cap < 1) throw ConfigError("tissue.cap must be >= 1");
  r.gate.cap = static_cast<std::size_t>(cap);
  r.gate.min_tumor_prob = cfg.get_double("tissue.min_tumor_prob", 0.0);
  if (!(r.gate.min_tumor_prob >= 0.0 && r.gate.min_tumor_prob <= 1.0)) throw ConfigError("tissue.min_tumor_prob must be in [0, 1]");
  r.model = nn::ArchitectureSpec::from_config(cfg);
  r.train = train::TrainConfig::from_config(cfg);
  r.n_bootstrap = static_cast<int>(cfg.get_int("metrics.n_bootstrap", 1000));
  if (r.n_bootstrap < 1) throw ConfigError("metrics.n_bootstrap must be >= 1");
  r.level = cfg.get_double("metrics.level", 0.95);
  if (!(r.level > 0.0 && r.level < 1.0)) throw ConfigError("metrics.level must be in (0, 1)");
  r.benchmark_trained = families(cfg, "benchmark.trained", {});
  std::vector<std::string> all;
  for (auto f : nn::kAllFamilies) all.push_back(nn::family_key(f));
  r.benchmark_forward_only = families(cfg, "benchmark.forward_only", all);
  return r;
}

void RunConfig::require_manifest() const {
  if (manifest.empty()) throw ConfigError("paths.manifest is not set");
  if (!fs::is_regular_file(manifest)) throw ConfigError("manifest " + manifest.string() + " does not exist");
}

std::string RunConfig::model_key(nn::Family family) const {
  std::string t(task_name(task));
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return t + "_" + nn::family_key(family);
}

}  // namespace tilebench::cli
