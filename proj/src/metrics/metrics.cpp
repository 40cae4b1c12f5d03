#include "tilebench/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/parallel.hpp"
#include "tilebench/core/rng.hpp"

namespace tilebench::metrics {

std::string_view metric_name(Metric m) { return m == Metric::AUROC ? "AUROC" : "AUPRC"; }

Metric parse_metric(std::string_view text) {
  if (text == "AUROC" || text == "auroc") return Metric::AUROC;
  if (text == "AUPRC" || text == "auprc") return Metric::AUPRC;
  throw ConfigError("unknown metric '" + std::string(text) + "'");
}

namespace {

struct Counts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

Counts check_inputs(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw InvariantViolation(std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) + " labels");
  }
  Counts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvariantViolation("label outside {0,1}");
    if (!std::isfinite(scores[i])) throw InvariantViolation("non-finite score");
    (labels[i] ? c.pos : c.neg)++;
  }
  return c;
}

// Indices ordered by score; ties keep input order (irrelevant to the results).
std::vector<std::size_t> order_by_score(const std::vector<double>& scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const Counts c = check_inputs(scores, labels);
  if (c.pos == 0 || c.neg == 0) throw SingleClass("AUROC needs both classes");
  const auto idx = order_by_score(scores, false);
  // Twice the Mann-Whitney count, kept integral so ties are exact.
  std::int64_t twice = 0;
  std::int64_t neg_below = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::int64_t pos = 0, neg = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? pos : neg)++;
      ++j;
    }
    twice += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    i = j;
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const Counts c = check_inputs(scores, labels);
  if (c.pos == 0) throw NoPositives("AUPRC needs at least one positive");
  const auto idx = order_by_score(scores, true);
  double ap = 0.0;
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::int64_t pos = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp)++;
      pos += labels[idx[j]];
      ++j;
    }
    if (pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(pos);
    }
    i = j;
  }
  return ap / static_cast<double>(c.pos);
}

double compute(Metric m, const std::vector<double>& scores, const std::vector<int>& labels) {
  return m == Metric::AUROC ? auroc(scores, labels) : auprc(scores, labels);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvariantViolation("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapReplicates bootstrap_replicates(const std::vector<double>& scores, const std::vector<int>& labels, Metric m,
                                         int n, std::uint64_t seed, int threads) {
  const Counts c = check_inputs(scores, labels);
  if (c.pos == 0 || c.neg == 0) throw SingleClass("bootstrap needs both classes");
  if (n <= 0) throw ConfigError("n_bootstrap must be positive");
  const std::size_t size = scores.size();
  BootstrapReplicates out;
  out.values.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<std::size_t> rejected(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<double> s(size);
    std::vector<int> l(size);
    for (;;) {
      std::size_t pos = 0;
      for (std::size_t i = 0; i < size; ++i) {
        const auto k = uniform_index(rng, size);
        s[i] = scores[k];
        l[i] = labels[k];
        pos += static_cast<std::size_t>(labels[k]);
      }
      if (pos > 0 && pos < size) break;
      ++rejected[r];
    }
    out.values[r] = compute(m, s, l);
  });
  for (auto k : rejected) out.rejected += k;
  return out;
}

MetricReport bootstrap_ci(const std::vector<double>& scores, const std::vector<int>& labels, Metric m, int n,
                          double level, std::uint64_t seed, int threads) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must be in (0, 1)");
  MetricReport rep;
  rep.metric = m;
  rep.point_estimate = compute(m, scores, labels);
  const auto reps = bootstrap_replicates(scores, labels, m, n, seed, threads);
  rep.ci_low = quantile(reps.values, (1.0 - level) / 2.0);
  rep.ci_high = quantile(reps.values, (1.0 + level) / 2.0);
  rep.level = level;
  rep.n_bootstrap = n;
  rep.seed = seed;
  rep.n_patients = scores.size();
  rep.rejected_resamples = reps.rejected;
  return rep;
}

}  // namespace tilebench::metrics
