#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace crowdtab {

// Shannon entropy in nats; zero-probability terms contribute nothing.
inline double shannon_entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p < 0.0 || p > 1.0 + 1e-12) throw std::invalid_argument("probability out of range");
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// Differential entropy of a normal: log(2 pi e var) / 2.
inline double normal_entropy(double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("variance must be positive");
    constexpr double kLog2PiE = 2.837877066409345;  // log(2 pi e)
    return 0.5 * (kLog2PiE + std::log(variance));
}

inline double uniform_entropy(std::size_t n) {
    if (n == 0) throw std::invalid_argument("need at least one outcome");
    return std::log(static_cast<double>(n));
}

}  // namespace crowdtab
