#include "tilebench/train/folds.hpp"

#include <algorithm>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/rng.hpp"

namespace tilebench::train {

std::vector<std::string> FoldPlan::patients_in(int fold) const {
  std::vector<std::string> out;
  for (const auto& [p, f] : assignments) {
    if (f == fold) out.push_back(p);
  }
  return out;
}

std::vector<std::string> FoldPlan::patients_outside(const std::vector<int>& folds) const {
  std::vector<std::string> out;
  for (const auto& [p, f] : assignments) {
    if (std::find(folds.begin(), folds.end(), f) == folds.end()) out.push_back(p);
  }
  return out;
}

std::map<std::string, int> patient_labels(const CohortManifest& manifest) {
  std::map<std::string, int> out;
  for (const auto& s : manifest.slides) {
    const auto label = s.label(manifest.task);
    if (!label) throw InvariantViolation("patient " + s.patient_id + " has no " + std::string(task_name(manifest.task)) + " label");
    const auto [it, inserted] = out.emplace(s.patient_id, *label);
    if (!inserted && it->second != *label) throw InvariantViolation("patient " + s.patient_id + " has conflicting labels");
  }
  return out;
}

FoldPlan stratified_kfold(const std::map<std::string, int>& patient_labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be >= 2");
  std::vector<std::string> by_class[2];
  for (const auto& [p, label] : patient_labels) {
    if (label != 0 && label != 1) throw InvariantViolation("patient " + p + " label outside {0,1}");
    by_class[label].push_back(p);  // map order: sorted ids
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  std::size_t next = 0;
  for (int c : {1, 0}) {
    auto& ids = by_class[c];
    if (ids.size() < static_cast<std::size_t>(k)) {
      throw TooFewPatients(std::to_string(ids.size()) + " patients of class " + std::to_string(c) + " for " +
                           std::to_string(k) + " folds");
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[uniform_index(rng, i)]);
    for (const auto& p : ids) plan.assignments[p] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return plan;
}

FoldPlan stratified_kfold(const CohortManifest& manifest, int k, std::uint64_t seed) {
  return stratified_kfold(patient_labels(manifest), k, seed);
}

}  // namespace tilebench::train
