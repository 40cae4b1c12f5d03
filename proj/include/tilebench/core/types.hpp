#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tilebench {

enum class Task { MSI, BRAF, CIMP };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);
// MSI-H, BRAF-mutant, CIMP-H.
std::string_view positive_class(Task task);

enum class SplitRole { Train, ExternalTest };

std::string_view split_role_name(SplitRole role);
SplitRole parse_split_role(std::string_view name);

inline constexpr std::size_t kNumTissueClasses = 9;
using TissueProbs = std::array<double, kNumTissueClasses>;

struct SlideRecord {
  std::string slide_id;
  std::string patient_id;
  std::string cohort;
  std::string image_path;
  double microns_per_pixel = 0.5;
  std::map<Task, int> labels;

  std::optional<int> label(Task task) const;
  bool operator==(const SlideRecord&) const = default;
};

struct TileRecord {
  std::string slide_id;
  std::int64_t x = 0;
  std::int64_t y = 0;
  int native_size = 512;
  int output_size = 224;
  double qc_edge_fraction = 0.0;
  bool qc_pass = false;
  std::optional<TissueProbs> tissue_probs;
  bool selected = false;
  std::string tile_path;

  // "<slide_id>_<x>_<y>", also the output file stem.
  std::string tile_id() const;
  bool operator==(const TileRecord&) const = default;
};

struct CohortManifest {
  Task task = Task::MSI;
  std::vector<SlideRecord> slides;
  SplitRole split_role = SplitRole::Train;

  bool operator==(const CohortManifest&) const = default;
};

struct LabelCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t unlabeled = 0;

  std::size_t labeled() const { return positives + negatives; }
  // "positives:negatives", the layout used by cohort summary tables.
  std::string ratio() const;
};

LabelCounts count_labels(const CohortManifest& manifest);

}  // namespace tilebench
