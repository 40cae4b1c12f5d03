#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tilebench::metrics {

enum class Metric { AUROC, AUPRC };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view text);

// Mann-Whitney: (#{s_pos > s_neg} + 0.5 #{s_pos == s_neg}) / (n_pos n_neg).
// Throws SingleClass unless both labels occur; labels must be 0/1.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Average precision: sum over descending distinct scores of
// precision(cutoff) * (recall gained at that cutoff). Tied scores form one
// cutoff. Throws NoPositives without a positive label.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

double compute(Metric m, const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricReport {
  Metric metric = Metric::AUROC;
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  int n_bootstrap = 0;
  std::uint64_t seed = 0;
  std::size_t n_patients = 0;
  // Resamples drawn with a single class and redrawn.
  std::size_t rejected_resamples = 0;
  bool contains_point() const { return ci_low <= point_estimate && point_estimate <= ci_high; }
};

struct BootstrapReplicates {
  std::vector<double> values;  // replicate r at index r
  std::size_t rejected = 0;
};

// Replicate r resamples patients with replacement from a generator seeded by
// mix_seed(seed, r), so results do not depend on the thread count.
BootstrapReplicates bootstrap_replicates(const std::vector<double>& scores, const std::vector<int>& labels, Metric m,
                                         int n, std::uint64_t seed, int threads = 1);

// Percentile interval of the replicate distribution ((1 - level) / 2 and
// (1 + level) / 2, linear interpolation between order statistics).
MetricReport bootstrap_ci(const std::vector<double>& scores, const std::vector<int>& labels, Metric m, int n = 1000,
                          double level = 0.95, std::uint64_t seed = 0, int threads = 1);

// Linear-interpolated quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace tilebench::metrics
