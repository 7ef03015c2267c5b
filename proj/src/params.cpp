#include "crowdtab/params.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace crowdtab {

ModelParams ModelParams::ones(std::uint32_t workers, std::uint32_t rows, std::uint32_t cols,
                              double epsilon) {
    ModelParams p;
    p.phi.assign(workers, 1.0);
    p.alpha.assign(rows, 1.0);
    p.beta.assign(cols, 1.0);
    p.epsilon = epsilon;
    p.priors.assign(cols, ColumnPrior{});
    return p;
}

namespace {
void check_positive(const std::vector<double>& v, const char* name) {
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument(std::string(name) + " must be positive and finite");
        }
    }
}
}  // namespace

void ModelParams::validate() const {
    check_positive(phi, "phi");
    check_positive(alpha, "alpha");
    check_positive(beta, "beta");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("epsilon must be positive and finite");
    }
    for (const ColumnPrior& p : priors) {
        if (!(p.variance > 0.0) || !std::isfinite(p.variance) || !std::isfinite(p.mean)) {
            throw std::invalid_argument("column prior needs finite mean and variance > 0");
        }
    }
}

void ModelParams::normalize_difficulties() {
    if (alpha.empty() || beta.empty()) return;
    const double a_mean = std::accumulate(alpha.begin(), alpha.end(), 0.0) / alpha.size();
    const double b_mean = std::accumulate(beta.begin(), beta.end(), 0.0) / beta.size();
    for (double& a : alpha) a /= a_mean;
    for (double& b : beta) b /= b_mean;
    for (double& f : phi) f *= a_mean * b_mean;
}

}  // namespace crowdtab
