#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tilebench/core/types.hpp"

namespace tilebench {

struct ScoreRow {
  std::string entity_id;
  Task task = Task::MSI;
  double score = 0.0;
  std::optional<int> label;

  bool operator==(const ScoreRow&) const = default;
};

// Tile- or patient-level scores. CSV header: entity_id,task,score,label
struct ScoreTable {
  std::vector<ScoreRow> rows;

  std::vector<double> scores() const;
  // Throws InvariantViolation if any row is unlabeled.
  std::vector<int> labels() const;
};

ScoreTable read_score_table(std::istream& in);
ScoreTable load_score_table(const std::filesystem::path& path);
void write_score_table(std::ostream& out, const ScoreTable& table);
void save_score_table(const std::filesystem::path& path, const ScoreTable& table);

// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace tilebench
