#include "crowdtab/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace crowdtab {

std::optional<double> error_rate(const TableSchema& schema, const std::vector<double>& estimates,
                                 const GroundTruth& truth) {
    if (estimates.size() != schema.cell_count())
        throw std::invalid_argument("estimates size does not match the schema");
    std::size_t scored = 0, wrong = 0;
    for (std::uint32_t i = 0; i < schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < schema.column_count(); ++j) {
            if (!schema.column(j).is_categorical()) continue;
            const std::size_t cell = schema.cell_index(i, j);
            if (!truth.known(cell)) continue;
            scored++;
            if (std::llround(estimates[cell]) != std::llround(truth.value(cell))) wrong++;
        }
    }
    if (scored == 0) return std::nullopt;
    return static_cast<double>(wrong) / static_cast<double>(scored);
}

std::optional<double> mnad(const TableSchema& schema, const AnswerSet& answers,
                           const std::vector<double>& estimates, const GroundTruth& truth) {
    if (estimates.size() != schema.cell_count())
        throw std::invalid_argument("estimates size does not match the schema");
    const std::uint32_t m = schema.column_count();
    std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    for (const Answer& a : answers.all()) {
        if (schema.column(a.col).is_categorical()) continue;
        sum[a.col] += a.value;
        sum_sq[a.col] += a.value * a.value;
        count[a.col]++;
    }

    double total = 0.0;
    std::size_t cols = 0;
    for (std::uint32_t j = 0; j < m; ++j) {
        if (schema.column(j).is_categorical() || count[j] == 0) continue;
        const double mean = sum[j] / static_cast<double>(count[j]);
        const double var = sum_sq[j] / static_cast<double>(count[j]) - mean * mean;
        if (!(var > 0.0)) continue;

        double sq_err = 0.0;
        std::size_t scored = 0;
        for (std::uint32_t i = 0; i < schema.row_count; ++i) {
            const std::size_t cell = schema.cell_index(i, j);
            if (!truth.known(cell)) continue;
            const double d = estimates[cell] - truth.value(cell);
            sq_err += d * d;
            scored++;
        }
        if (scored == 0) continue;
        total += std::sqrt(sq_err / static_cast<double>(scored)) / std::sqrt(var);
        cols++;
    }
    if (cols == 0) return std::nullopt;
    return total / static_cast<double>(cols);
}

}  // namespace crowdtab
