#include "tilebench/core/types.hpp"

#include "tilebench/core/errors.hpp"

namespace tilebench {

std::string_view task_name(Task task) {
  switch (task) {
    case Task::MSI: return "MSI";
    case Task::BRAF: return "BRAF";
    case Task::CIMP: return "CIMP";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "MSI") return Task::MSI;
  if (name == "BRAF") return Task::BRAF;
  if (name == "CIMP") return Task::CIMP;
  throw ParseError("unknown task '" + std::string(name) + "'");
}

std::string_view positive_class(Task task) {
  switch (task) {
    case Task::MSI: return "MSI-H";
    case Task::BRAF: return "BRAF-mutant";
    case Task::CIMP: return "CIMP-H";
  }
  return "?";
}

std::string_view split_role_name(SplitRole role) {
  return role == SplitRole::Train ? "train" : "external_test";
}

SplitRole parse_split_role(std::string_view name) {
  if (name == "train") return SplitRole::Train;
  if (name == "external_test") return SplitRole::ExternalTest;
  throw ParseError("unknown split_role '" + std::string(name) + "'");
}

std::optional<int> SlideRecord::label(Task task) const {
  auto it = labels.find(task);
  if (it == labels.end()) return std::nullopt;
  return it->second;
}

std::string TileRecord::tile_id() const {
  return slide_id + "_" + std::to_string(x) + "_" + std::to_string(y);
}

std::string LabelCounts::ratio() const {
  return std::to_string(positives) + ":" + std::to_string(negatives);
}

LabelCounts count_labels(const CohortManifest& manifest) {
  LabelCounts counts;
  for (const auto& slide : manifest.slides) {
    auto label = slide.label(manifest.task);
    if (!label) {
      ++counts.unlabeled;
    } else if (*label == 1) {
      ++counts.positives;
    } else {
      ++counts.negatives;
    }
  }
  return counts;
}

}  // namespace tilebench
