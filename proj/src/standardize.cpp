#include "crowdtab/standardize.hpp"

#include <cmath>

namespace crowdtab {

Standardizer Standardizer::identity(const TableSchema& schema) {
    Standardizer s;
    s.offset_.assign(schema.column_count(), 0.0);
    s.scale_.assign(schema.column_count(), 1.0);
    return s;
}

Standardizer Standardizer::fit(const TableSchema& schema, const AnswerSet& answers) {
    Standardizer s = identity(schema);
    const std::size_t m = schema.column_count();
    std::vector<double> sum(m, 0.0), sumsq(m, 0.0);
    std::vector<std::size_t> n(m, 0);
    for (const Answer& a : answers.all()) {
        if (schema.columns[a.col].is_categorical()) continue;
        sum[a.col] += a.value;
        sumsq[a.col] += a.value * a.value;
        ++n[a.col];
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (schema.columns[j].is_categorical() || n[j] == 0) continue;
        const double mean = sum[j] / n[j];
        const double var = sumsq[j] / n[j] - mean * mean;
        s.offset_[j] = mean;
        s.scale_[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

}  // namespace crowdtab
