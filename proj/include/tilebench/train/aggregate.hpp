#pragma once

#include <map>
#include <string>
#include <vector>

#include "tilebench/core/score_table.hpp"
#include "tilebench/train/config.hpp"

namespace tilebench::train {

// Patient-level scores from tile scores (entity_id = tile id). Every tile must
// map to a patient; every patient in `expected` (if given) must receive at
// least one tile. Patient labels come from their tiles and must agree.
// TopKMean averages the k highest tile scores (all of them when fewer).
// Rows are sorted by patient id.
// Throws EmptyGroup, InvariantViolation.
ScoreTable aggregate(const ScoreTable& tile_scores, const std::map<std::string, std::string>& tile_to_patient,
                     Aggregation method = Aggregation::Mean, int top_k = 10,
                     const std::vector<std::string>& expected = {});

// The statistic alone, for one non-empty group.
double aggregate_values(std::vector<double> values, Aggregation method, int top_k = 10);

}  // namespace tilebench::train
