#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "crowdtab/answers.hpp"
#include "crowdtab/assignment.hpp"
#include "crowdtab/inference.hpp"
#include "crowdtab/schema.hpp"

namespace crowdtab {

struct GeneratorConfig {
    std::uint32_t rows = 50;
    std::uint32_t cols = 10;
    double cat_ratio = 0.5;        // floor(cat_ratio * cols) categorical columns
    double mean_difficulty = 1.0;  // target mean of alpha_i * beta_j
    std::uint32_t worker_count = 30;
    double phi_log_mean = std::log(0.3);  // worker variance ~ lognormal, standardized units
    double phi_log_sd = 0.5;
    std::uint32_t answers_per_task = 5;
    double epsilon = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

// A generated table plus everything needed to synthesize worker answers:
// ground truth, difficulty factors, per-worker variances, and the scale that
// maps standardized noise onto each continuous column's domain.
struct SyntheticTable {
    TableSchema schema;
    GroundTruth truth;
    std::vector<double> alpha;         // per row
    std::vector<double> beta;          // per column
    std::vector<double> worker_phi;    // per worker
    std::vector<double> column_scale;  // (hi - lo)/sqrt(12) for continuous, 1 otherwise
    double epsilon = 0.5;
};

SyntheticTable generate_table(const GeneratorConfig& config);

// One answer drawn from the worker model: categorical correct with
// probability erf(eps / sqrt(2 alpha beta phi)), otherwise a uniform wrong
// label; continuous normal around the truth with the standardized variance
// mapped onto the column scale.
Answer synthesize_answer(const SyntheticTable& table, WorkerId worker, std::uint32_t row,
                         std::uint32_t col, std::mt19937_64& rng);

// Uniform allocation: every cell receives config.answers_per_task answers
// from distinct randomly chosen workers.
AnswerSet generate_answers(const SyntheticTable& table, const GeneratorConfig& config);

struct NoiseConfig {
    double gamma = 0.0;  // fraction of answers perturbed
    std::uint64_t seed = 0;

    void validate() const;
};

// Perturbs ceil(|A| * gamma) answers drawn with replacement: categorical
// answers are replaced by a uniform label, continuous answers get a N(0,1)
// shift on the z-score scale (column statistics fixed from the input set).
AnswerSet inject_noise(const AnswerSet& answers, const TableSchema& schema,
                       const NoiseConfig& config);

struct Checkpoint {
    std::size_t answers = 0;
    double answers_per_task = 0.0;
    std::optional<double> error_rate;
    std::optional<double> mnad;
};

struct SimulationRun {
    std::vector<Checkpoint> checkpoints;
    std::size_t answers_collected = 0;
    bool exhausted = false;  // worker pool ran out before the budget
};

struct SimulationConfig {
    AssignmentConfig assignment;
    InferenceConfig inference;
    std::size_t budget = 1000;              // total answers, seeding included
    double initial_answers_per_task = 1.0;  // seeding phase size
    double checkpoint_answers_per_task = 0.5;
    std::vector<WorkerId> arrival_sequence;  // empty: round-robin over the pool
    std::uint64_t seed = 0;

    void validate() const;
};

// Online assignment loop: seeds every task, then alternates worker arrival,
// task selection under the configured policy, answer synthesis, and
// incremental ingestion; checkpoints metrics with a full EM refit (and a
// correlation refit for the structure-aware policy) on a fixed cadence.
SimulationRun run_simulation(const SyntheticTable& table, const SimulationConfig& config);

}  // namespace crowdtab
