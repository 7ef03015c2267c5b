#include "crowdtab/schema.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace crowdtab {

const Column& TableSchema::column(std::uint32_t j) const {
    if (j >= columns.size()) {
        throw std::out_of_range("column index " + std::to_string(j) + " out of range");
    }
    return columns[j];
}

namespace {

// Names and labels travel through unquoted CSV fields.
bool csv_safe(const std::string& s) {
    return !s.empty() && s.find_first_of(",\r\n") == std::string::npos;
}

}  // namespace

void TableSchema::validate() const {
    if (columns.empty()) throw std::invalid_argument("schema has no columns");
    if (row_count == 0) throw std::invalid_argument("schema has no rows");

    std::unordered_set<std::string> names;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const Column& c = columns[j];
        if (c.index != j) {
            throw std::invalid_argument("column '" + c.name + "' has index " +
                                        std::to_string(c.index) + ", expected " + std::to_string(j));
        }
        if (!csv_safe(c.name)) {
            throw std::invalid_argument("column name '" + c.name +
                                        "' must be non-empty and free of commas/newlines");
        }
        if (!names.insert(c.name).second) {
            throw std::invalid_argument("duplicate column name '" + c.name + "'");
        }
        if (c.is_categorical()) {
            if (c.labels.size() < 2) {
                throw std::invalid_argument("categorical column '" + c.name + "' needs >= 2 labels");
            }
            for (const std::string& l : c.labels) {
                if (!csv_safe(l)) {
                    throw std::invalid_argument("label '" + l + "' of column '" + c.name +
                                                "' must be non-empty and free of commas/newlines");
                }
            }
            std::unordered_set<std::string> uniq(c.labels.begin(), c.labels.end());
            if (uniq.size() != c.labels.size()) {
                throw std::invalid_argument("categorical column '" + c.name + "' has duplicate labels");
            }
        } else {
            if (!(c.lo < c.hi) || !std::isfinite(c.lo) || !std::isfinite(c.hi)) {
                throw std::invalid_argument("continuous column '" + c.name + "' needs lo < hi");
            }
        }
    }
}

}  // namespace crowdtab
