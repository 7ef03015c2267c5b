#pragma once

#include <cstdint>
#include <vector>

#include "crowdtab/answers.hpp"
#include "crowdtab/params.hpp"
#include "crowdtab/schema.hpp"

namespace crowdtab {

// One observed worker error in a column: categorical errors are 0/1
// (mismatch against the estimated label), continuous errors are the signed
// residual against the estimated truth on the standardized scale.
struct ErrorSample {
    WorkerId worker;
    std::uint32_t row;
    double error;
};

// Per-column error samples derived from the current point estimates
// (standardized scale, one entry per cell, labels stored as their index).
std::vector<std::vector<ErrorSample>> error_samples(const TableSchema& schema,
                                                    const AnswerSet& answers,
                                                    const std::vector<double>& estimates_internal);

// Marginal error distribution of one column: Bernoulli(p) for categorical
// columns, N(mean, var) for continuous ones. Absent when no samples exist.
struct ErrorMarginal {
    bool present = false;
    double p = 0.0;     // categorical: P(error)
    double mean = 0.0;  // continuous moments
    double var = 1.0;
};

// Fitted conditional of e_j given e_k for one ordered column pair. Which
// fields are meaningful depends on the two column kinds:
//   cat|cat    p_given[b]        P(e_j = 1 | e_k = b)
//   cont|cont  mean/var/rho      bivariate normal of (e_j, e_k)
//   cont|cat   split_mean/var[b] normal fit of e_j within each e_k bit
//   cat|cont   split_mean/var[b] normal fit of e_k within each e_j bit,
//              p_marginal        P(e_j = 1), inverted via Bayes at query time
struct PairConditional {
    bool present = false;
    double p_given[2] = {0.0, 0.0};
    double mean_j = 0.0, mean_k = 0.0;
    double var_j = 1.0, var_k = 1.0;
    double rho = 0.0;
    double split_mean[2] = {0.0, 0.0};
    double split_var[2] = {1.0, 1.0};
    double p_marginal = 0.0;
};

// Column-pair correlation structure: Pearson weights over paired errors that
// share a (worker, row), plus the fitted conditionals. Pairs with fewer than
// two shared samples or a degenerate margin get weight 0 and no conditional.
struct CorrelationModel {
    std::uint32_t columns = 0;
    std::vector<double> weights;  // row-major columns x columns, diagonal 1
    std::vector<ErrorMarginal> marginals;
    std::vector<PairConditional> conditionals;  // row-major: e_j given e_k

    double weight(std::uint32_t j, std::uint32_t k) const { return weights[j * columns + k]; }
    const PairConditional& conditional(std::uint32_t j, std::uint32_t k) const {
        return conditionals[j * columns + k];
    }
    bool has_any_conditional() const;
};

CorrelationModel fit_correlations(const TableSchema& schema, const AnswerSet& answers,
                                  const std::vector<double>& estimates_internal);

// P(e_j = 1 | e_k = x) for a categorical column j; `k_categorical` says how
// to read x (an error bit vs a continuous residual).
double categorical_error_given(const PairConditional& c, bool k_categorical, double x);

// Conditional N(mean, var) of e_j given e_k = x for a continuous column j.
struct NormalMoments {
    double mean;
    double var;
};
NormalMoments continuous_error_given(const PairConditional& c, bool k_categorical, double x);

// Predictive distribution over a worker's answer to one cell: label
// probabilities for categorical columns, a normal mixture (weights summing to
// one, possibly signed under negative correlation weights) for continuous.
struct AnswerDistribution {
    bool categorical = false;
    std::vector<double> label_probs;
    struct Component {
        double weight;
        double mean;
        double var;
    };
    std::vector<Component> components;
};

// Answer model conditioned only on the cell's point estimate: the worker hits
// the estimated label with probability q, or answers N(estimate, variance).
AnswerDistribution inherent_answer_distribution(const TableSchema& schema,
                                                const ModelParams& params,
                                                const std::vector<double>& estimates_internal,
                                                WorkerId worker, std::uint32_t row,
                                                std::uint32_t col);

// Answer model conditioned on the worker's observed errors elsewhere in the
// same row, combined across columns by normalized correlation weights. Falls
// back to the inherent model when no usable conditional exists or the weight
// mass is non-positive.
AnswerDistribution conditional_answer_distribution(const TableSchema& schema,
                                                   const AnswerSet& answers,
                                                   const ModelParams& params,
                                                   const CorrelationModel& model,
                                                   const std::vector<double>& estimates_internal,
                                                   WorkerId worker, std::uint32_t row,
                                                   std::uint32_t col);

}  // namespace crowdtab
