#include "crowdtab/baselines.hpp"

#include <algorithm>

namespace crowdtab {

std::optional<std::size_t> majority_vote(const std::vector<std::size_t>& labels) {
    if (labels.empty()) return std::nullopt;
    const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
    std::vector<std::size_t> counts(max_label + 1, 0);
    for (std::size_t l : labels) counts[l]++;
    std::size_t best = 0;
    for (std::size_t l = 1; l <= max_label; ++l) {
        if (counts[l] > counts[best]) best = l;
    }
    return best;
}

std::optional<double> median_vote(std::vector<double> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<std::optional<double>> baseline_estimates(const TableSchema& schema,
                                                      const AnswerSet& answers) {
    std::vector<std::optional<double>> out(schema.cell_count());
    for (std::uint32_t i = 0; i < schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < schema.column_count(); ++j) {
            const auto ids = answers.cell_answers(i, j);
            if (ids.empty()) continue;
            if (schema.column(j).is_categorical()) {
                std::vector<std::size_t> labels;
                labels.reserve(ids.size());
                for (std::uint32_t id : ids) labels.push_back(answers.at(id).label());
                out[schema.cell_index(i, j)] =
                    static_cast<double>(*majority_vote(labels));
            } else {
                std::vector<double> values;
                values.reserve(ids.size());
                for (std::uint32_t id : ids) values.push_back(answers.at(id).value);
                out[schema.cell_index(i, j)] = *median_vote(std::move(values));
            }
        }
    }
    return out;
}

}  // namespace crowdtab
