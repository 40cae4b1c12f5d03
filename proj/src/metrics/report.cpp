#include "tilebench/metrics/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/core/score_table.hpp"
#include "tilebench/nn/models.hpp"

namespace tilebench::metrics {

using nlohmann::json;

namespace {

json metric_json(const MetricReport& m) {
  return {{"metric", std::string(metric_name(m.metric))},
          {"point_estimate", m.point_estimate},
          {"ci_low", m.ci_low},
          {"ci_high", m.ci_high},
          {"level", m.level},
          {"n_bootstrap", m.n_bootstrap},
          {"seed", m.seed},
          {"n_patients", m.n_patients},
          {"rejected_resamples", m.rejected_resamples},
          {"ci_contains_point", m.contains_point()}};
}

MetricReport metric_from(const json& j) {
  MetricReport m;
  m.metric = parse_metric(j.at("metric").get<std::string>());
  m.point_estimate = j.at("point_estimate").get<double>();
  m.ci_low = j.at("ci_low").get<double>();
  m.ci_high = j.at("ci_high").get<double>();
  m.level = j.at("level").get<double>();
  m.n_bootstrap = j.at("n_bootstrap").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_patients = j.at("n_patients").get<std::size_t>();
  m.rejected_resamples = j.at("rejected_resamples").get<std::size_t>();
  return m;
}

json timing_json(const TimingReport& t) {
  json spec = json::object();
  const auto spec_cfg = t.spec.to_config();
  for (const auto& [k, v] : spec_cfg.entries()) spec[k] = v;
  return {{"epoch_train_seconds", t.epoch_train_seconds},
          {"full_prediction_seconds", t.full_prediction_seconds},
          {"parameter_count", t.parameter_count},
          {"spec", spec}};
}

TimingReport timing_from(const json& j) {
  TimingReport t;
  t.epoch_train_seconds = j.at("epoch_train_seconds").get<double>();
  t.full_prediction_seconds = j.at("full_prediction_seconds").get<double>();
  t.parameter_count = j.at("parameter_count").get<std::int64_t>();
  KeyValueConfig cfg;
  for (const auto& [k, v] : j.at("spec").items()) cfg.set(k, v.get<std::string>());
  t.spec = nn::ArchitectureSpec::from_config(cfg);
  return t;
}

std::string num(double v, const char* fmt) {
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::string report_json(const ModelReport& r) {
  json j;
  j["task"] = std::string(task_name(r.task));
  j["model"] = nn::family_key(r.family);
  j["model_display"] = nn::family_display(r.family);
  j["mode"] = r.mode;
  j["parameter_count"] = r.parameter_count;
  j["reference_parameter_count"] = r.reference_parameter_count;
  j["seed"] = r.seed;
  j["auroc"] = r.auroc ? metric_json(*r.auroc) : json(nullptr);
  j["auprc"] = r.auprc ? metric_json(*r.auprc) : json(nullptr);
  j["timing"] = r.timing ? timing_json(*r.timing) : json(nullptr);
  return j.dump(2) + "\n";
}

ModelReport parse_report_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ModelReport r;
    r.task = parse_task(j.at("task").get<std::string>());
    r.family = nn::parse_family(j.at("model").get<std::string>());
    r.mode = j.at("mode").get<std::string>();
    r.parameter_count = j.at("parameter_count").get<std::int64_t>();
    r.reference_parameter_count = j.at("reference_parameter_count").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("auroc").is_null()) r.auroc = metric_from(j.at("auroc"));
    if (!j.at("auprc").is_null()) r.auprc = metric_from(j.at("auprc"));
    if (!j.at("timing").is_null()) r.timing = timing_from(j.at("timing"));
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

void save_report(const std::filesystem::path& path, const ModelReport& report) {
  write_text_atomic(path, report_json(report));
}

ModelReport load_report(const std::filesystem::path& path) { return parse_report_json(read_text(path)); }

std::string report_file_name(Task task, nn::Family family) {
  std::string t(task_name(task));
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return t + "_" + nn::family_key(family) + ".json";
}

std::vector<ModelReport> sorted_reports(std::vector<ModelReport> reports) {
  auto key = [](const ModelReport& r) { return std::pair(static_cast<int>(r.task), static_cast<int>(r.family)); };
  std::stable_sort(reports.begin(), reports.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (key(reports[i]) == key(reports[i - 1])) {
      throw InvariantViolation("two reports for " + std::string(task_name(reports[i].task)) + " " +
                               nn::family_key(reports[i].family));
    }
  }
  return reports;
}

std::string summary_csv(const std::vector<ModelReport>& reports) {
  std::string out = std::string(kSummaryHeader) + "\n";
  auto metric_cols = [](const std::optional<MetricReport>& m) {
    if (!m) return std::string(",,");
    return format_double(m->point_estimate) + "," + format_double(m->ci_low) + "," + format_double(m->ci_high);
  };
  for (const auto& r : sorted_reports(reports)) {
    out += std::string(task_name(r.task)) + "," + nn::family_display(r.family) + "," + r.mode + "," +
           std::to_string(r.reference_parameter_count) + "," + std::to_string(r.parameter_count) + "," +
           metric_cols(r.auroc) + "," + metric_cols(r.auprc) + "\n";
  }
  return out;
}

std::string timing_csv(const std::vector<ModelReport>& reports) {
  std::string out = std::string(kTimingHeader) + "\n";
  for (const auto& r : sorted_reports(reports)) {
    if (!r.timing) continue;
    out += std::string(task_name(r.task)) + "," + nn::family_display(r.family) + "," + r.mode + "," +
           std::to_string(r.timing->parameter_count) + "," + format_double(r.timing->epoch_train_seconds) + "," +
           format_double(r.timing->full_prediction_seconds) + "\n";
  }
  return out;
}

std::string summary_table(const std::vector<ModelReport>& reports) {
  auto cell = [](const std::optional<MetricReport>& m) {
    if (!m) return std::string("n/a");
    return num(m->point_estimate, "%.3f") + " (" + num(m->ci_low, "%.3f") + "-" + num(m->ci_high, "%.3f") + ")";
  };
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-6s %-14s %-13s %10s  %-21s %-21s\n", "Task", "Model", "Mode", "Params (M)",
                "AUROC (95% CI)", "AUPRC (95% CI)");
  out += line;
  out += std::string(90, '-') + "\n";
  for (const auto& r : sorted_reports(reports)) {
    std::snprintf(line, sizeof line, "%-6s %-14s %-13s %10s  %-21s %-21s\n", std::string(task_name(r.task)).c_str(),
                  nn::family_display(r.family).c_str(), r.mode.c_str(),
                  num(static_cast<double>(r.reference_parameter_count) / 1e6, "%.2f").c_str(), cell(r.auroc).c_str(),
                  cell(r.auprc).c_str());
    out += line;
  }
  return out;
}

}  // namespace tilebench::metrics
