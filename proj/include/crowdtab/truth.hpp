#pragma once

#include <cstddef>
#include <vector>

namespace crowdtab {

// Per-cell posterior: label probabilities for a categorical cell, or the
// (mean, variance) of a normal for a continuous cell.
class TruthDistribution {
  public:
    TruthDistribution() = default;

    // Throws std::invalid_argument unless probs are in [0,1] and sum to 1 (1e-9).
    static TruthDistribution categorical(std::vector<double> probs);
    // Throws std::invalid_argument unless variance > 0.
    static TruthDistribution normal(double mean, double variance);

    bool is_categorical() const { return !probs_.empty(); }

    const std::vector<double>& probs() const { return probs_; }
    double mean() const { return mean_; }
    double variance() const { return variance_; }

    // Most probable label, ties broken by lowest index.
    std::size_t argmax_label() const;

    // continuous -> mean; categorical -> argmax label index as a double.
    double point_estimate() const;

  private:
    std::vector<double> probs_;
    double mean_ = 0.0;
    double variance_ = 1.0;
};

}  // namespace crowdtab
