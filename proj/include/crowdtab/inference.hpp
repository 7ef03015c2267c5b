#pragma once

#include <stdexcept>
#include <vector>

#include "crowdtab/answers.hpp"
#include "crowdtab/params.hpp"
#include "crowdtab/schema.hpp"
#include "crowdtab/standardize.hpp"
#include "crowdtab/truth.hpp"

namespace crowdtab {

struct InferenceConfig {
    double convergence_threshold = 1e-5;  // max absolute parameter change
    int max_em_iterations = 100;
    double gd_step = 0.05;
    int gd_max_iterations = 200;
    double gd_tolerance = 1e-6;
    double epsilon = 0.5;  // quality window, applied on the standardized scale

    void validate() const;
};

// Raised when gradient ascent on the M-step objective diverges; carries the
// last parameters that still satisfied the monotonicity contract.
class OptimizationError : public std::runtime_error {
  public:
    OptimizationError(const std::string& what, ModelParams last_stable)
        : std::runtime_error(what), last_stable_params(std::move(last_stable)) {}

    ModelParams last_stable_params;
};

// Snapshot of an EM run. Answers and truths live on the standardized scale;
// `standardizer` maps back to reporting units.
struct InferenceState {
    TableSchema schema;
    AnswerSet answers;  // standardized values
    Standardizer standardizer;
    ModelParams params;
    std::vector<TruthDistribution> truths;  // one per cell
    double objective = 0.0;                 // Q after the last E-step
    int iterations = 0;
    std::vector<double> objective_history;  // Q after each iteration's E-step
    InferenceConfig config;
};

// Posterior truth distribution per cell given fixed parameters. Cells with no
// answers fall back to the prior (uniform / the column prior).
std::vector<TruthDistribution> e_step(const TableSchema& schema, const AnswerSet& answers,
                                      const ModelParams& params);

// Posterior of a single cell; `extra` optionally adds one hypothetical answer
// (already on the model scale) without mutating the set.
TruthDistribution cell_posterior(const TableSchema& schema, const AnswerSet& answers,
                                 const ModelParams& params, std::uint32_t row, std::uint32_t col,
                                 const Answer* extra = nullptr);

// Expected complete-data log-likelihood Q(alpha, beta, phi), prior terms
// included.
double m_step_objective(const TableSchema& schema, const AnswerSet& answers,
                        const std::vector<TruthDistribution>& truths, const ModelParams& params);

// Gradients of Q with respect to log alpha_i, log beta_j, log phi_u.
struct ObjectiveGradients {
    std::vector<double> log_alpha;
    std::vector<double> log_beta;
    std::vector<double> log_phi;
};
ObjectiveGradients m_step_gradients(const TableSchema& schema, const AnswerSet& answers,
                                    const std::vector<TruthDistribution>& truths,
                                    const ModelParams& params);

// Gradient ascent on Q over log-parameters with step halving on overshoot.
// Guarantees Q(result) >= Q(input) - gd_tolerance; throws OptimizationError
// after three consecutive tolerance-breaking decreases. Workers with fewer
// than two answers have phi clamped to [0.01, 100].
ModelParams m_step(const TableSchema& schema, const AnswerSet& answers,
                   const std::vector<TruthDistribution>& truths, ModelParams params,
                   const InferenceConfig& config);

// Full EM: standardizes the answers, initializes truths from the priors, then
// alternates m_step and e_step until the largest parameter change drops below
// config.convergence_threshold or the iteration cap is hit.
InferenceState run_em(const AnswerSet& answers, const TableSchema& schema,
                      const InferenceConfig& config = {});

// Point estimates on the reporting scale: label index (categorical) or the
// de-standardized posterior mean (continuous).
std::vector<double> extract_truth(const InferenceState& state);

// Point estimates on the model (standardized) scale.
std::vector<double> point_estimates_internal(const InferenceState& state);

// Ingests one new answer (reporting scale): refreshes the touched cell's
// posterior and locally re-optimizes phi for workers who answered that cell.
// Everything else is untouched.
InferenceState incremental_update(InferenceState state, const Answer& new_answer);

// 1-D ascent of Q restricted to one worker's answer terms as a function of
// phi_u, difficulties and truths held fixed. `extra` adds one hypothetical
// answer by that worker; `override_truth` substitutes the posterior of cell
// `override_cell`. Returns the unclamped optimum. Both incremental updates
// and hypothetical-answer scoring are built on this.
double refit_worker_phi(const TableSchema& schema, const AnswerSet& answers,
                        const std::vector<TruthDistribution>& truths, const ModelParams& params,
                        WorkerId worker, const InferenceConfig& config,
                        const Answer* extra = nullptr,
                        const TruthDistribution* override_truth = nullptr,
                        std::size_t override_cell = static_cast<std::size_t>(-1));

}  // namespace crowdtab
