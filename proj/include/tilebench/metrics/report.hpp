#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tilebench/core/types.hpp"
#include "tilebench/metrics/metrics.hpp"
#include "tilebench/metrics/timing.hpp"

namespace tilebench::metrics {

// One document per (task, model).
struct ModelReport {
  Task task = Task::MSI;
  nn::Family family = nn::Family::ResNet18;
  // "trained" (cross-validated scores) or "forward_only" (untrained weights,
  // timing and plumbing only).
  std::string mode = "trained";
  std::int64_t parameter_count = 0;            // model that produced the scores
  std::int64_t reference_parameter_count = 0;  // full-size variant of the family
  std::optional<MetricReport> auroc;
  std::optional<MetricReport> auprc;
  std::optional<TimingReport> timing;
  std::uint64_t seed = 0;
};

std::string report_json(const ModelReport& report);
ModelReport parse_report_json(const std::string& text);
void save_report(const std::filesystem::path& path, const ModelReport& report);
ModelReport load_report(const std::filesystem::path& path);

// "<task>_<family key>.json"
std::string report_file_name(Task task, nn::Family family);

// One row per report, ordered by task then family (table order).
// Throws InvariantViolation on two reports for the same (task, family).
std::vector<ModelReport> sorted_reports(std::vector<ModelReport> reports);

inline constexpr const char* kSummaryHeader =
    "task,model,mode,reference_parameters,parameters,auroc,auroc_ci_low,auroc_ci_high,auprc,auprc_ci_low,auprc_ci_high";
inline constexpr const char* kTimingHeader = "task,model,mode,parameters,epoch_train_seconds,full_prediction_seconds";

// Metric columns only, so the file is reproducible byte for byte.
std::string summary_csv(const std::vector<ModelReport>& reports);
// Wall-clock columns, for reports that carry a timing.
std::string timing_csv(const std::vector<ModelReport>& reports);
// Fixed-width text table: model, reference params (M), AUROC [CI], AUPRC [CI].
std::string summary_table(const std::vector<ModelReport>& reports);

}  // namespace tilebench::metrics
