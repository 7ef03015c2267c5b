#include "crowdtab/truth.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace crowdtab {

TruthDistribution TruthDistribution::categorical(std::vector<double> probs) {
    if (probs.empty()) throw std::invalid_argument("categorical distribution needs >= 1 label");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0 + 1e-12)) {
            throw std::invalid_argument("label probability outside [0,1]");
        }
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("label probabilities sum to " + std::to_string(sum));
    }
    TruthDistribution d;
    d.probs_ = std::move(probs);
    return d;
}

TruthDistribution TruthDistribution::normal(double mean, double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
        throw std::invalid_argument("normal truth needs finite mean and variance > 0");
    }
    TruthDistribution d;
    d.mean_ = mean;
    d.variance_ = variance;
    return d;
}

std::size_t TruthDistribution::argmax_label() const {
    std::size_t best = 0;
    for (std::size_t z = 1; z < probs_.size(); ++z) {
        if (probs_[z] > probs_[best]) best = z;
    }
    return best;
}

double TruthDistribution::point_estimate() const {
    return is_categorical() ? static_cast<double>(argmax_label()) : mean_;
}

}  // namespace crowdtab
