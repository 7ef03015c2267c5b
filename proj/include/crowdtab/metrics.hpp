#pragma once

#include <optional>
#include <vector>

#include "crowdtab/answers.hpp"
#include "crowdtab/schema.hpp"

namespace crowdtab {

// Fraction of categorical cells with known ground truth whose estimated label
// mismatches it. Absent when no such cell exists.
std::optional<double> error_rate(const TableSchema& schema, const std::vector<double>& estimates,
                                 const GroundTruth& truth);

// Mean over continuous columns of RMSE against ground truth divided by the
// standard deviation of that column's collected answers. Columns with no
// scored cells or zero answer spread are skipped; absent when none remain.
// Estimates and answers are on the reporting scale.
std::optional<double> mnad(const TableSchema& schema, const AnswerSet& answers,
                           const std::vector<double>& estimates, const GroundTruth& truth);

}  // namespace crowdtab
