#include "tilebench/train/aggregate.hpp"

#include <algorithm>
#include <numeric>

#include "tilebench/core/errors.hpp"

namespace tilebench::train {

double aggregate_values(std::vector<double> values, Aggregation method, int top_k) {
  if (values.empty()) throw EmptyGroup("no tile scores to aggregate");
  // Sorting first makes the sums independent of tile order.
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  switch (method) {
    case Aggregation::Median:
      return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    case Aggregation::TopKMean: {
      const auto k = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(top_k, 1)));
      return std::accumulate(values.end() - static_cast<std::ptrdiff_t>(k), values.end(), 0.0) / static_cast<double>(k);
    }
    case Aggregation::Mean:
      break;
  }
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
}

ScoreTable aggregate(const ScoreTable& tile_scores, const std::map<std::string, std::string>& tile_to_patient,
                     Aggregation method, int top_k, const std::vector<std::string>& expected) {
  struct Group {
    std::vector<double> scores;
    std::optional<int> label;
  };
  std::map<std::string, Group> groups;
  std::optional<Task> task;
  for (const auto& row : tile_scores.rows) {
    const auto it = tile_to_patient.find(row.entity_id);
    if (it == tile_to_patient.end()) throw EmptyGroup("tile " + row.entity_id + " maps to no patient");
    if (task && *task != row.task) throw InvariantViolation("tile scores mix tasks");
    task = row.task;
    auto [g, inserted] = groups.try_emplace(it->second);
    auto& group = g->second;
    if (inserted) {
      group.label = row.label;
    } else if (group.label != row.label) {
      throw InvariantViolation("patient " + it->second + " has tiles with conflicting labels");
    }
    group.scores.push_back(row.score);
  }
  for (const auto& p : expected) {
    if (!groups.count(p)) throw EmptyGroup("patient " + p + " has no tile scores");
  }
  ScoreTable out;
  for (auto& [patient, group] : groups) {
    out.rows.push_back({patient, *task, aggregate_values(std::move(group.scores), method, top_k), group.label});
  }
  return out;
}

}  // namespace tilebench::train
