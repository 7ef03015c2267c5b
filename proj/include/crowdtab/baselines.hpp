#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "crowdtab/answers.hpp"
#include "crowdtab/schema.hpp"

namespace crowdtab {

// Most frequent label; ties go to the lowest label index. Empty input yields
// no estimate.
std::optional<std::size_t> majority_vote(const std::vector<std::size_t>& labels);

// Median; even counts take the midpoint of the two central values.
std::optional<double> median_vote(std::vector<double> values);

// Per-cell baseline table: majority vote on categorical columns, median on
// continuous ones. Cells without answers get no estimate.
std::vector<std::optional<double>> baseline_estimates(const TableSchema& schema,
                                                      const AnswerSet& answers);

}  // namespace crowdtab
