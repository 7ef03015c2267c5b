#pragma once

#include <cmath>
#include <cstddef>

#include "crowdtab/answers.hpp"
#include "crowdtab/params.hpp"
#include "crowdtab/schema.hpp"

namespace crowdtab {

// Unified worker answer model. A worker's answer to cell (i,j) has variance
// alpha_i * beta_j * phi_u; quality is the probability mass of that normal
// within +-epsilon of the truth, q = erf(epsilon / sqrt(2 v)). Categorical
// answers are correct with probability q, with the remaining mass spread
// evenly over the wrong labels.

inline constexpr double kQualityFloor = 1e-12;  // clamp for q before taking logs

inline double normal_log_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * M_PI * variance) - d * d / (2.0 * variance);
}

inline double quality_from_variance(double epsilon, double variance) {
    return std::erf(epsilon / std::sqrt(2.0 * variance));
}

inline double clamp_quality(double q) {
    if (q < kQualityFloor) return kQualityFloor;
    if (q > 1.0 - kQualityFloor) return 1.0 - kQualityFloor;
    return q;
}

// alpha_i * beta_j * phi_u. Throws std::out_of_range on an unknown id.
double cell_variance(const ModelParams& params, WorkerId worker, std::uint32_t row,
                     std::uint32_t col);

// erf(epsilon / sqrt(2 * cell_variance)), in (0,1).
double worker_quality(const ModelParams& params, WorkerId worker, std::uint32_t row,
                      std::uint32_t col);

// Probability of a categorical answer given the truth label: q if correct,
// (1-q)/(label_count-1) otherwise. q is clamped away from {0,1}.
inline double categorical_answer_prob(double q, std::size_t label_count, bool correct) {
    q = clamp_quality(q);
    return correct ? q : (1.0 - q) / static_cast<double>(label_count - 1);
}

// Log-likelihood of one answer under the worker model. `truth_value` is the
// label index for categorical columns, the truth value on the model's scale
// for continuous ones. Throws std::invalid_argument on a kind mismatch.
double answer_log_likelihood(const TableSchema& schema, const Answer& answer, double truth_value,
                             const ModelParams& params);

}  // namespace crowdtab
