#include "tilebench/core/score_table.hpp"

#include <charconv>
#include <fstream>
#include <string>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"

namespace tilebench {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

std::vector<double> ScoreTable::scores() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.score);
  return out;
}

std::vector<int> ScoreTable::labels() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r.label) throw InvariantViolation("entity '" + r.entity_id + "' has no label");
    out.push_back(*r.label);
  }
  return out;
}

ScoreTable read_score_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "entity_id,task,score,label") {
    throw ParseError("score table must start with header 'entity_id,task,score,label'");
  }
  ScoreTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cols = split(trim(line), ',');
    if (cols.size() != 4) throw ParseError("score table line " + std::to_string(lineno) + ": expected 4 columns");
    ScoreRow row;
    row.entity_id = cols[0];
    row.task = parse_task(cols[1]);
    const auto& s = cols[2];
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), row.score);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ParseError("score table line " + std::to_string(lineno) + ": bad score '" + s + "'");
    }
    if (!cols[3].empty()) {
      if (cols[3] != "0" && cols[3] != "1") {
        throw ParseError("score table line " + std::to_string(lineno) + ": label must be 0, 1 or empty");
      }
      row.label = cols[3] == "1" ? 1 : 0;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score table " + path.string());
  return read_score_table(in);
}

void write_score_table(std::ostream& out, const ScoreTable& table) {
  out << "entity_id,task,score,label\n";
  for (const auto& r : table.rows) {
    out << r.entity_id << ',' << task_name(r.task) << ',' << format_double(r.score) << ',';
    if (r.label) out << *r.label;
    out << '\n';
  }
}

void save_score_table(const std::filesystem::path& path, const ScoreTable& table) {
  write_file_atomic(path, [&](std::ostream& out) { write_score_table(out, table); });
}

}  // namespace tilebench
