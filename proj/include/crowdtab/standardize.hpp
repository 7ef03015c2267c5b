#pragma once

#include <vector>

#include "crowdtab/answers.hpp"
#include "crowdtab/schema.hpp"

namespace crowdtab {

// Maps each continuous column's answers to z-scores using the mean and
// population standard deviation of all collected answers in that column.
// Categorical columns pass through. A column whose answers have zero spread
// is only mean-centered.
class Standardizer {
  public:
    Standardizer() = default;

    static Standardizer fit(const TableSchema& schema, const AnswerSet& answers);
    static Standardizer identity(const TableSchema& schema);

    double to_internal(std::uint32_t col, double value) const {
        return (value - offset_[col]) / scale_[col];
    }
    double from_internal(std::uint32_t col, double value) const {
        return offset_[col] + scale_[col] * value;
    }
    Answer to_internal(const Answer& a) const {
        return Answer{a.worker, a.row, a.col, to_internal(a.col, a.value)};
    }

    double offset(std::uint32_t col) const { return offset_[col]; }
    double scale(std::uint32_t col) const { return scale_[col]; }

  private:
    std::vector<double> offset_;  // categorical: 0
    std::vector<double> scale_;   // categorical: 1
};

}  // namespace crowdtab
