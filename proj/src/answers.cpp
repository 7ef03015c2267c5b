#include "crowdtab/answers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace crowdtab {

AnswerSet::AnswerSet(TableSchema schema) : schema_(std::move(schema)) {
    schema_.validate();
    by_cell_.resize(schema_.cell_count());
}

std::uint32_t AnswerSet::add(const Answer& a) {
    if (a.row >= schema_.row_count || a.col >= schema_.column_count()) {
        throw std::invalid_argument("answer addresses cell (" + std::to_string(a.row) + "," +
                                    std::to_string(a.col) + ") outside the table");
    }
    const Column& c = schema_.columns[a.col];
    if (c.is_categorical()) {
        double ip = 0.0;
        if (!std::isfinite(a.value) || std::modf(a.value, &ip) != 0.0 || a.value < 0.0 ||
            a.value >= static_cast<double>(c.label_count())) {
            throw std::invalid_argument("categorical answer for column '" + c.name +
                                        "' must be a label index in [0," +
                                        std::to_string(c.label_count()) + ")");
        }
    } else if (!std::isfinite(a.value)) {
        throw std::invalid_argument("continuous answer for column '" + c.name + "' must be finite");
    }
    if (has_answered(a.worker, a.row, a.col)) {
        throw std::invalid_argument("duplicate answer by worker " + std::to_string(a.worker) +
                                    " for cell (" + std::to_string(a.row) + "," +
                                    std::to_string(a.col) + ")");
    }

    const auto id = static_cast<std::uint32_t>(answers_.size());
    answers_.push_back(a);
    by_cell_[schema_.cell_index(a.row, a.col)].push_back(id);
    if (a.worker >= worker_count_) {
        worker_count_ = a.worker + 1;
        by_worker_.resize(worker_count_);
    }
    by_worker_[a.worker].push_back(id);
    return id;
}

std::span<const std::uint32_t> AnswerSet::cell_answers(std::uint32_t row, std::uint32_t col) const {
    return by_cell_[schema_.cell_index(row, col)];
}

std::span<const std::uint32_t> AnswerSet::worker_answers(WorkerId u) const {
    if (u >= by_worker_.size()) return {};
    return by_worker_[u];
}

bool AnswerSet::has_answered(WorkerId u, std::uint32_t row, std::uint32_t col) const {
    for (std::uint32_t id : cell_answers(row, col)) {
        if (answers_[id].worker == u) return true;
    }
    return false;
}

}  // namespace crowdtab
