#include "crowdtab/worker_model.hpp"

#include <stdexcept>
#include <string>

namespace crowdtab {

double cell_variance(const ModelParams& params, WorkerId worker, std::uint32_t row,
                     std::uint32_t col) {
    if (worker >= params.phi.size()) throw std::out_of_range("unknown worker " + std::to_string(worker));
    if (row >= params.alpha.size()) throw std::out_of_range("unknown row " + std::to_string(row));
    if (col >= params.beta.size()) throw std::out_of_range("unknown column " + std::to_string(col));
    return params.alpha[row] * params.beta[col] * params.phi[worker];
}

double worker_quality(const ModelParams& params, WorkerId worker, std::uint32_t row,
                      std::uint32_t col) {
    return quality_from_variance(params.epsilon, cell_variance(params, worker, row, col));
}

double answer_log_likelihood(const TableSchema& schema, const Answer& answer, double truth_value,
                             const ModelParams& params) {
    const Column& c = schema.column(answer.col);
    const double v = cell_variance(params, answer.worker, answer.row, answer.col);
    if (c.is_categorical()) {
        double ip = 0.0;
        if (std::modf(truth_value, &ip) != 0.0 || truth_value < 0.0 ||
            truth_value >= static_cast<double>(c.label_count())) {
            throw std::invalid_argument("truth for categorical column '" + c.name +
                                        "' must be a label index");
        }
        const double q = quality_from_variance(params.epsilon, v);
        const bool correct = answer.label() == static_cast<std::size_t>(truth_value);
        return std::log(categorical_answer_prob(q, c.label_count(), correct));
    }
    if (!std::isfinite(truth_value)) {
        throw std::invalid_argument("truth for continuous column '" + c.name + "' must be finite");
    }
    return normal_log_pdf(answer.value, truth_value, v);
}

}  // namespace crowdtab
