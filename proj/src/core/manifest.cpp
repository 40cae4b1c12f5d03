#include "tilebench/core/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/core/rng.hpp"

namespace tilebench {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw ParseError("line " + std::to_string(line) + ": missing field '" + name + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError("line " + std::to_string(line) + ": field '" + name + "': " + e.what());
  }
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    json obj = json::parse(text);
    if (!obj.is_object()) throw ParseError("line " + std::to_string(line) + ": not an object");
    return obj;
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
}

SlideRecord slide_from_json(const json& obj, std::size_t line) {
  SlideRecord s;
  s.slide_id = field<std::string>(obj, "slide_id", line);
  s.patient_id = field<std::string>(obj, "patient_id", line);
  s.cohort = field<std::string>(obj, "cohort", line);
  s.image_path = field<std::string>(obj, "image_path", line);
  s.microns_per_pixel = field<double>(obj, "microns_per_pixel", line);
  if (auto it = obj.find("labels"); it != obj.end()) {
    if (!it->is_object()) throw ParseError("line " + std::to_string(line) + ": labels must be an object");
    for (const auto& [task, value] : it->items()) {
      if (!value.is_number_integer()) {
        throw InvariantViolation("line " + std::to_string(line) + ": label for " + task +
                                 " is not an integer");
      }
      s.labels[parse_task(task)] = value.get<int>();
    }
  }
  return s;
}

json slide_to_json(const SlideRecord& s) {
  json labels = json::object();
  for (const auto& [task, value] : s.labels) labels[std::string(task_name(task))] = value;
  return json{{"slide_id", s.slide_id},
              {"patient_id", s.patient_id},
              {"cohort", s.cohort},
              {"image_path", s.image_path},
              {"microns_per_pixel", s.microns_per_pixel},
              {"labels", labels}};
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    fn(text, line);
  }
}

}  // namespace

void validate(const CohortManifest& manifest) {
  std::set<std::string> ids;
  for (const auto& s : manifest.slides) {
    if (s.slide_id.empty()) throw InvariantViolation("empty slide_id");
    if (!ids.insert(s.slide_id).second) throw InvariantViolation("duplicate slide_id '" + s.slide_id + "'");
    if (!(s.microns_per_pixel > 0.0)) {
      throw InvariantViolation("slide '" + s.slide_id + "': microns_per_pixel must be > 0");
    }
    for (const auto& [task, value] : s.labels) {
      if (value != 0 && value != 1) {
        throw InvariantViolation("slide '" + s.slide_id + "': label for " +
                                 std::string(task_name(task)) + " must be 0 or 1");
      }
    }
  }
}

CohortManifest read_manifest(std::istream& in) {
  CohortManifest manifest;
  bool have_header = false;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    json obj = parse_line(text, line);
    if (!have_header) {
      manifest.task = parse_task(field<std::string>(obj, "task", line));
      manifest.split_role = parse_split_role(field<std::string>(obj, "split_role", line));
      have_header = true;
      return;
    }
    manifest.slides.push_back(slide_from_json(obj, line));
  });
  if (!have_header) throw ParseError("manifest is empty (missing header line)");
  validate(manifest);
  return manifest;
}

CohortManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return read_manifest(in);
}

void write_manifest(std::ostream& out, const CohortManifest& manifest) {
  out << json{{"task", task_name(manifest.task)}, {"split_role", split_role_name(manifest.split_role)}}.dump()
      << '\n';
  for (const auto& s : manifest.slides) out << slide_to_json(s).dump() << '\n';
}

void save_manifest(const std::filesystem::path& path, const CohortManifest& manifest) {
  write_file_atomic(path, [&](std::ostream& out) { write_manifest(out, manifest); });
}

CohortManifest select_one_slide_per_patient(const CohortManifest& manifest, std::uint64_t seed) {
  std::map<std::string, std::pair<std::uint64_t, std::string>> winner;
  for (const auto& s : manifest.slides) {
    const std::uint64_t key = mix_seed(mix_seed(seed, s.patient_id), s.slide_id);
    auto [it, inserted] = winner.try_emplace(s.patient_id, key, s.slide_id);
    if (!inserted && std::pair(key, s.slide_id) < it->second) it->second = {key, s.slide_id};
  }
  CohortManifest out{manifest.task, {}, manifest.split_role};
  for (const auto& s : manifest.slides) {
    if (winner.at(s.patient_id).second == s.slide_id) out.slides.push_back(s);
  }
  return out;
}

std::vector<TileRecord> read_tiles(std::istream& in) {
  std::vector<TileRecord> tiles;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    json obj = parse_line(text, line);
    TileRecord t;
    t.slide_id = field<std::string>(obj, "slide_id", line);
    t.x = field<std::int64_t>(obj, "x", line);
    t.y = field<std::int64_t>(obj, "y", line);
    t.native_size = field<int>(obj, "native_size", line);
    t.output_size = field<int>(obj, "output_size", line);
    t.qc_edge_fraction = field<double>(obj, "qc_edge_fraction", line);
    t.qc_pass = field<bool>(obj, "qc_pass", line);
    if (auto it = obj.find("tissue_probs"); it != obj.end() && !it->is_null()) {
      auto probs = it->get<std::vector<double>>();
      if (probs.size() != kNumTissueClasses) {
        throw ParseError("line " + std::to_string(line) + ": tissue_probs must have 9 entries");
      }
      TissueProbs p{};
      std::copy(probs.begin(), probs.end(), p.begin());
      t.tissue_probs = p;
    }
    t.selected = field<bool>(obj, "selected", line);
    t.tile_path = field<std::string>(obj, "tile_path", line);
    if (t.x < 0 || t.y < 0) throw InvariantViolation("line " + std::to_string(line) + ": negative tile origin");
    tiles.push_back(std::move(t));
  });
  return tiles;
}

std::vector<TileRecord> load_tiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tile list " + path.string());
  return read_tiles(in);
}

void write_tiles(std::ostream& out, const std::vector<TileRecord>& tiles) {
  for (const auto& t : tiles) {
    json obj{{"slide_id", t.slide_id},
             {"x", t.x},
             {"y", t.y},
             {"native_size", t.native_size},
             {"output_size", t.output_size},
             {"qc_edge_fraction", t.qc_edge_fraction},
             {"qc_pass", t.qc_pass},
             {"tissue_probs", nullptr},
             {"selected", t.selected},
             {"tile_path", t.tile_path}};
    if (t.tissue_probs) obj["tissue_probs"] = std::vector<double>(t.tissue_probs->begin(), t.tissue_probs->end());
    out << obj.dump() << '\n';
  }
}

void save_tiles(const std::filesystem::path& path, const std::vector<TileRecord>& tiles) {
  write_file_atomic(path, [&](std::ostream& out) { write_tiles(out, tiles); });
}

}  // namespace tilebench
