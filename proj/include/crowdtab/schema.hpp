#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace crowdtab {

enum class ColumnKind { Categorical, Continuous };

// One attribute of the collected table. Categorical columns carry an ordered
// label set; continuous columns carry an informational [lo, hi] domain.
struct Column {
    std::uint32_t index = 0;
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    std::vector<std::string> labels;  // categorical only, >= 2 distinct
    double lo = 0.0;                  // continuous only
    double hi = 1.0;

    bool is_categorical() const { return kind == ColumnKind::Categorical; }
    std::size_t label_count() const { return labels.size(); }
};

struct TableSchema {
    std::vector<Column> columns;
    std::uint32_t row_count = 0;
    std::string key_attribute;

    std::size_t column_count() const { return columns.size(); }
    std::size_t cell_count() const { return static_cast<std::size_t>(row_count) * columns.size(); }

    // Row-major cell addressing.
    std::size_t cell_index(std::uint32_t row, std::uint32_t col) const {
        return static_cast<std::size_t>(row) * columns.size() + col;
    }

    const Column& column(std::uint32_t j) const;

    // Throws std::invalid_argument on a malformed schema.
    void validate() const;
};

}  // namespace crowdtab
