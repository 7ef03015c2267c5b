#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "crowdtab/schema.hpp"

namespace crowdtab {

using WorkerId = std::uint32_t;

// One worker's value for a cell. For categorical columns `value` holds the
// label index; for continuous columns the raw number.
struct Answer {
    WorkerId worker = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;

    std::size_t label() const { return static_cast<std::size_t>(value); }
};

// The global observation set, indexed per cell and per worker. At most one
// answer per (worker, cell). Append-only, single writer.
class AnswerSet {
  public:
    explicit AnswerSet(TableSchema schema);

    // Validates against the schema and both indexes; throws std::invalid_argument
    // on a duplicate or out-of-domain answer. Returns the answer id.
    std::uint32_t add(const Answer& a);

    const TableSchema& schema() const { return schema_; }
    const std::vector<Answer>& all() const { return answers_; }
    std::size_t size() const { return answers_.size(); }
    bool empty() const { return answers_.empty(); }

    const Answer& at(std::uint32_t id) const { return answers_[id]; }

    // Ids of answers for cell (row, col).
    std::span<const std::uint32_t> cell_answers(std::uint32_t row, std::uint32_t col) const;
    // Ids of answers given by worker u.
    std::span<const std::uint32_t> worker_answers(WorkerId u) const;

    bool has_answered(WorkerId u, std::uint32_t row, std::uint32_t col) const;

    // One past the largest worker id seen.
    std::uint32_t worker_count() const { return worker_count_; }

  private:
    TableSchema schema_;
    std::vector<Answer> answers_;
    std::vector<std::vector<std::uint32_t>> by_cell_;
    std::vector<std::vector<std::uint32_t>> by_worker_;
    std::uint32_t worker_count_ = 0;
};

// Per-cell ground truth; categorical cells store the label index.
class GroundTruth {
  public:
    GroundTruth() = default;
    explicit GroundTruth(std::size_t cell_count) : values_(cell_count, 0.0), known_(cell_count, 0) {}

    void set(std::size_t cell, double value) {
        values_[cell] = value;
        known_[cell] = 1;
    }
    bool known(std::size_t cell) const { return known_[cell] != 0; }
    double value(std::size_t cell) const { return values_[cell]; }
    std::optional<double> get(std::size_t cell) const {
        if (!known(cell)) return std::nullopt;
        return values_[cell];
    }
    std::size_t cell_count() const { return values_.size(); }

  private:
    std::vector<double> values_;
    std::vector<char> known_;
};

}  // namespace crowdtab
