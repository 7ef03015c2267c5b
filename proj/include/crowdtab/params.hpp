#pragma once

#include <cstdint>
#include <vector>

#include "crowdtab/answers.hpp"

namespace crowdtab {

// Prior over a continuous column's truth (on the model's working scale).
struct ColumnPrior {
    double mean = 0.0;
    double variance = 1.0;
};

// All free parameters of the worker answer model: per-worker variance phi_u,
// per-row difficulty alpha_i, per-column difficulty beta_j, and the quality
// window epsilon mapping variance to a correctness probability.
struct ModelParams {
    std::vector<double> phi;    // per worker, > 0
    std::vector<double> alpha;  // per row, > 0
    std::vector<double> beta;   // per column, > 0
    double epsilon = 0.5;
    std::vector<ColumnPrior> priors;  // per column; meaningful for continuous ones

    static ModelParams ones(std::uint32_t workers, std::uint32_t rows, std::uint32_t cols,
                            double epsilon = 0.5);

    // Throws std::invalid_argument on any non-positive entry.
    void validate() const;

    // Rescales so that mean(alpha) = mean(beta) = 1, folding the factors into
    // phi. Leaves every product alpha_i * beta_j * phi_u unchanged.
    void normalize_difficulties();
};

}  // namespace crowdtab
