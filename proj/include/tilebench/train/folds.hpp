#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tilebench/core/types.hpp"

namespace tilebench::train {

struct FoldPlan {
  int k = 5;
  std::map<std::string, int> assignments;  // patient_id -> fold
  std::uint64_t seed = 0;

  std::vector<std::string> patients_in(int fold) const;
  std::vector<std::string> patients_outside(const std::vector<int>& folds) const;
};

// Patients of each class are shuffled (per-class stream of `seed`) and dealt
// round-robin; the deal continues where the previous class stopped so fold
// sizes also stay within one of each other.
// Throws InvariantViolation for an unlabeled patient or conflicting labels,
// TooFewPatients when a class has fewer than k patients.
FoldPlan stratified_kfold(const std::map<std::string, int>& patient_labels, int k, std::uint64_t seed);
FoldPlan stratified_kfold(const CohortManifest& manifest, int k, std::uint64_t seed);

// patient_id -> label for the manifest task.
std::map<std::string, int> patient_labels(const CohortManifest& manifest);

}  // namespace tilebench::train
