#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "crowdtab/correlation.hpp"
#include "crowdtab/inference.hpp"

namespace crowdtab {

enum class Policy { Random, Looping, Entropy, InherentIG, StructureAwareIG };

struct AssignmentConfig {
    Policy policy = Policy::StructureAwareIG;
    int s_cont = 10;   // quantile samples for continuous answer expectations
    int batch_k = 1;   // tasks handed to a worker per arrival
    std::uint64_t seed = 0;

    void validate() const;
};

struct CellRef {
    std::uint32_t row;
    std::uint32_t col;

    bool operator==(const CellRef&) const = default;
};

// Entropy of a cell posterior: Shannon for labels, differential for normals.
double posterior_entropy(const TruthDistribution& t);

// Standard normal quantiles at (m + 0.5)/s for m = 0..s-1 (cached per s).
const std::vector<double>& standard_normal_quantiles(int s);

// Entropy of the cell posterior after hypothetically ingesting `answer`
// (model scale), mirroring incremental_update: the cell posterior is
// refreshed and the reliabilities of workers on that cell are refit locally.
// Pure with respect to `state`.
double hypothetical_cell_entropy(const InferenceState& state, const Answer& answer);

// Expected entropy reduction of the cell posterior from one answer by this
// worker, the answer drawn from `dist` (labels enumerated, continuous
// components sampled at s_cont equi-probability quantiles).
double expected_gain(const InferenceState& state, WorkerId worker, std::uint32_t row,
                     std::uint32_t col, const AnswerDistribution& dist, int s_cont);

// Gain under the worker's inherent answer model around the point estimate.
double inherent_gain(const InferenceState& state, std::uint32_t row, std::uint32_t col,
                     WorkerId worker, const AssignmentConfig& config);

// Gain with the answer model conditioned on the worker's observed errors in
// the same row; reduces to inherent_gain when no conditional applies.
double structure_aware_gain(const InferenceState& state, const CorrelationModel& model,
                            std::uint32_t row, std::uint32_t col, WorkerId worker,
                            const AssignmentConfig& config);

// Total gain of a candidate batch: the sum of individual gains, valid under
// the one-cell-at-a-time posterior locality of the update rule.
double batch_gain(const InferenceState& state, const CorrelationModel* model,
                  const std::vector<CellRef>& cells, WorkerId worker,
                  const AssignmentConfig& config);

// Stateful task router. Holds the RNG for the random policy and the cyclic
// cursor for the looping policy; scoring policies are stateless.
class TaskSelector {
  public:
    explicit TaskSelector(AssignmentConfig config);

    // Picks up to batch_k cells this worker has not answered, best first.
    // Greedy top-k on the policy score; ties broken by (row, col). An empty
    // result means the worker has exhausted the table. `model` may be null
    // (structure-aware scoring then falls back to inherent gains).
    std::vector<CellRef> select(const InferenceState& state, const CorrelationModel* model,
                                WorkerId worker);

    const AssignmentConfig& config() const { return config_; }

  private:
    AssignmentConfig config_;
    std::mt19937_64 rng_;
    std::uint64_t loop_cursor_ = 0;
};

}  // namespace crowdtab
