#include "crowdtab/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "crowdtab/worker_model.hpp"

namespace crowdtab {
namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
        throw ParseError(path, line, "'" + s + "' is not a finite number");
    return v;
}

std::uint64_t parse_index(const std::string& s, const std::string& path, std::size_t line) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError(path, line, "'" + s + "' is not a non-negative integer");
    return std::strtoull(s.c_str(), nullptr, 10);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path, 0, "cannot open file for writing");
    return out;
}

// Column lookup by name plus label lookup per categorical column.
struct SchemaIndex {
    std::unordered_map<std::string, std::uint32_t> columns;
    std::vector<std::unordered_map<std::string, std::size_t>> labels;

    explicit SchemaIndex(const TableSchema& schema) {
        labels.resize(schema.column_count());
        for (std::uint32_t j = 0; j < schema.column_count(); ++j) {
            columns[schema.column(j).name] = j;
            for (std::size_t l = 0; l < schema.column(j).labels.size(); ++l)
                labels[j][schema.column(j).labels[l]] = l;
        }
    }
};

// Parses a column reference and a value field against the schema.
std::pair<std::uint32_t, double> parse_col_value(const TableSchema& schema,
                                                 const SchemaIndex& index,
                                                 const std::string& col_field,
                                                 const std::string& value_field,
                                                 const std::string& path, std::size_t line) {
    const auto cit = index.columns.find(col_field);
    if (cit == index.columns.end())
        throw ParseError(path, line, "unknown column '" + col_field + "'");
    const std::uint32_t j = cit->second;
    if (schema.column(j).is_categorical()) {
        const auto lit = index.labels[j].find(value_field);
        if (lit == index.labels[j].end())
            throw ParseError(path, line, "label '" + value_field + "' is not declared for column '" +
                                             col_field + "'");
        return {j, static_cast<double>(lit->second)};
    }
    return {j, parse_double(value_field, path, line)};
}

std::string value_to_field(const TableSchema& schema, std::uint32_t col, double value) {
    if (schema.column(col).is_categorical())
        return schema.column(col).labels[static_cast<std::size_t>(std::llround(value))];
    return format_double(value);
}

struct AnswerRecord {
    std::string worker;
    std::uint32_t row;
    std::uint32_t col;
    double value;
};

}  // namespace

ParseError::ParseError(std::string path_, std::size_t line_, const std::string& what)
    : std::runtime_error(line_ > 0 ? path_ + ":" + std::to_string(line_) + ": " + what
                                   : path_ + ": " + what),
      path(std::move(path_)),
      line(line_) {}

std::string format_double(double v) {
    // %.17g always round-trips; prefer the shortest precision that does.
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

TableSchema load_schema(const std::string& path) {
    std::ifstream in = open_input(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }
    TableSchema schema;
    try {
        if (!doc.contains("columns") || !doc["columns"].is_array())
            throw ParseError(path, 0, "schema needs a 'columns' array");
        std::uint32_t j = 0;
        for (const json& jc : doc["columns"]) {
            Column c;
            c.index = j++;
            c.name = jc.at("name").get<std::string>();
            const auto kind = jc.at("kind").get<std::string>();
            if (kind == "categorical") {
                c.kind = ColumnKind::Categorical;
                c.labels = jc.at("labels").get<std::vector<std::string>>();
            } else if (kind == "continuous") {
                c.kind = ColumnKind::Continuous;
                if (jc.contains("range")) {
                    c.lo = jc["range"].at(0).get<double>();
                    c.hi = jc["range"].at(1).get<double>();
                }
            } else {
                throw ParseError(path, 0, "unknown column kind '" + kind + "'");
            }
            schema.columns.push_back(std::move(c));
        }
        schema.key_attribute = doc.value("key", std::string{});
        schema.row_count = doc.value("rows", std::uint32_t{0});
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
    if (schema.row_count > 0) {
        try {
            schema.validate();
        } catch (const std::exception& e) {
            throw ParseError(path, 0, e.what());
        }
    }
    return schema;
}

void save_schema(const std::string& path, const TableSchema& schema) {
    json cols = json::array();
    for (const Column& c : schema.columns) {
        json jc;
        jc["name"] = c.name;
        if (c.is_categorical()) {
            jc["kind"] = "categorical";
            jc["labels"] = c.labels;
        } else {
            jc["kind"] = "continuous";
            jc["range"] = {c.lo, c.hi};
        }
        cols.push_back(std::move(jc));
    }
    json doc;
    doc["columns"] = std::move(cols);
    doc["key"] = schema.key_attribute;
    doc["rows"] = schema.row_count;
    std::ofstream out = open_output(path);
    out << doc.dump(2) << "\n";
}

Dataset load_dataset(const std::string& schema_path, const std::string& answers_path,
                     const std::optional<std::string>& truth_path) {
    TableSchema schema = load_schema(schema_path);
    const SchemaIndex index(schema);

    std::vector<AnswerRecord> records;
    std::uint32_t max_row = 0;
    {
        std::ifstream in = open_input(answers_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            lineno++;
            line = strip_cr(line);
            if (lineno == 1) {
                if (line != "worker,row,col,value")
                    throw ParseError(answers_path, 1, "expected header worker,row,col,value");
                continue;
            }
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() != 4)
                throw ParseError(answers_path, lineno, "expected 4 fields, got " +
                                                           std::to_string(fields.size()));
            const std::uint64_t row = parse_index(fields[1], answers_path, lineno);
            const auto [col, value] =
                parse_col_value(schema, index, fields[2], fields[3], answers_path, lineno);
            if (schema.row_count > 0 && row >= schema.row_count)
                throw ParseError(answers_path, lineno,
                                 "row " + fields[1] + " is outside the declared table");
            records.push_back(
                {fields[0], static_cast<std::uint32_t>(row), col, value});
            max_row = std::max(max_row, static_cast<std::uint32_t>(row));
        }
    }

    struct TruthRecord {
        std::uint32_t row;
        std::uint32_t col;
        double value;
    };
    std::vector<TruthRecord> truth_records;
    if (truth_path) {
        std::ifstream in = open_input(*truth_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            lineno++;
            line = strip_cr(line);
            if (lineno == 1) {
                if (line != "row,col,value")
                    throw ParseError(*truth_path, 1, "expected header row,col,value");
                continue;
            }
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() != 3)
                throw ParseError(*truth_path, lineno,
                                 "expected 3 fields, got " + std::to_string(fields.size()));
            const std::uint64_t row = parse_index(fields[0], *truth_path, lineno);
            const auto [col, value] =
                parse_col_value(schema, index, fields[1], fields[2], *truth_path, lineno);
            if (schema.row_count > 0 && row >= schema.row_count)
                throw ParseError(*truth_path, lineno,
                                 "row " + fields[0] + " is outside the declared table");
            truth_records.push_back({static_cast<std::uint32_t>(row), col, value});
            max_row = std::max(max_row, static_cast<std::uint32_t>(row));
        }
    }

    if (schema.row_count == 0) {
        if (records.empty() && truth_records.empty())
            throw ParseError(schema_path, 0,
                             "schema declares no row count and the data files are empty");
        schema.row_count = max_row + 1;
    }
    try {
        schema.validate();
    } catch (const std::exception& e) {
        throw ParseError(schema_path, 0, e.what());
    }

    Dataset ds{schema, AnswerSet(schema), {}, GroundTruth(schema.cell_count()), false};
    std::unordered_map<std::string, WorkerId> worker_ids;
    std::size_t lineno = 1;  // header was line 1
    for (const AnswerRecord& r : records) {
        lineno++;
        auto it = worker_ids.find(r.worker);
        if (it == worker_ids.end()) {
            it = worker_ids.emplace(r.worker, static_cast<WorkerId>(ds.worker_names.size())).first;
            ds.worker_names.push_back(r.worker);
        }
        try {
            ds.answers.add(Answer{it->second, r.row, r.col, r.value});
        } catch (const std::exception& e) {
            throw ParseError(answers_path, lineno, e.what());
        }
    }
    for (const TruthRecord& r : truth_records) {
        ds.truth.set(ds.schema.cell_index(r.row, r.col), r.value);
    }
    ds.has_truth = !truth_records.empty();
    return ds;
}

void save_answers(const std::string& path, const TableSchema& schema, const AnswerSet& answers,
                  const std::vector<std::string>& worker_names) {
    std::ofstream out = open_output(path);
    out << "worker,row,col,value\n";
    for (const Answer& a : answers.all()) {
        const std::string& worker = a.worker < worker_names.size()
                                        ? worker_names[a.worker]
                                        : "w" + std::to_string(a.worker);
        out << worker << ',' << a.row << ',' << schema.column(a.col).name << ','
            << value_to_field(schema, a.col, a.value) << '\n';
    }
}

void save_truth(const std::string& path, const TableSchema& schema, const GroundTruth& truth) {
    std::ofstream out = open_output(path);
    out << "row,col,value\n";
    for (std::uint32_t i = 0; i < schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < schema.column_count(); ++j) {
            const std::size_t cell = schema.cell_index(i, j);
            if (!truth.known(cell)) continue;
            out << i << ',' << schema.column(j).name << ','
                << value_to_field(schema, j, truth.value(cell)) << '\n';
        }
    }
}

void write_estimates_csv(const std::string& path, const TableSchema& schema,
                         const std::vector<std::optional<double>>& estimates,
                         const std::vector<std::optional<double>>& estimates_std) {
    std::ofstream out = open_output(path);
    out << "row,col,value,value_std\n";
    for (std::uint32_t i = 0; i < schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < schema.column_count(); ++j) {
            const std::size_t cell = schema.cell_index(i, j);
            if (!estimates[cell].has_value()) continue;
            out << i << ',' << schema.column(j).name << ','
                << value_to_field(schema, j, *estimates[cell]) << ',';
            if (estimates_std[cell].has_value()) out << format_double(*estimates_std[cell]);
            out << '\n';
        }
    }
}

std::vector<std::optional<double>> load_estimates_csv(const std::string& path,
                                                      const TableSchema& schema) {
    const SchemaIndex index(schema);
    std::vector<std::optional<double>> out(schema.cell_count());
    std::ifstream in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        line = strip_cr(line);
        if (lineno == 1) {
            if (line != "row,col,value,value_std")
                throw ParseError(path, 1, "expected header row,col,value,value_std");
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw ParseError(path, lineno, "expected 4 fields, got " +
                                               std::to_string(fields.size()));
        const std::uint64_t row = parse_index(fields[0], path, lineno);
        if (row >= schema.row_count)
            throw ParseError(path, lineno, "row " + fields[0] + " is outside the table");
        const auto [col, value] = parse_col_value(schema, index, fields[1], fields[2], path, lineno);
        out[schema.cell_index(static_cast<std::uint32_t>(row), col)] = value;
    }
    return out;
}

void write_worker_quality_csv(const std::string& path, const ModelParams& params,
                              const std::vector<std::string>& worker_names) {
    std::ofstream out = open_output(path);
    out << "worker,phi,quality\n";
    for (std::size_t u = 0; u < params.phi.size(); ++u) {
        const std::string& worker =
            u < worker_names.size() ? worker_names[u] : "w" + std::to_string(u);
        const double q = clamp_quality(quality_from_variance(params.epsilon, params.phi[u]));
        out << worker << ',' << format_double(params.phi[u]) << ',' << format_double(q) << '\n';
    }
}

void write_difficulty_csv(const std::string& path, const TableSchema& schema,
                          const ModelParams& params) {
    std::ofstream out = open_output(path);
    out << "kind,index,difficulty\n";
    for (std::size_t i = 0; i < params.alpha.size(); ++i)
        out << "row," << i << ',' << format_double(params.alpha[i]) << '\n';
    for (std::size_t j = 0; j < params.beta.size(); ++j)
        out << "column," << schema.column(static_cast<std::uint32_t>(j)).name << ','
            << format_double(params.beta[j]) << '\n';
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out = open_output(path);
    out << "method,error_rate,mnad\n";
    for (const MetricsRow& r : rows) {
        out << r.method << ',';
        if (r.error_rate) out << format_double(*r.error_rate);
        out << ',';
        if (r.mnad) out << format_double(*r.mnad);
        out << '\n';
    }
}

void write_curve_csv(const std::string& path, const SimulationRun& run) {
    std::ofstream out = open_output(path);
    out << "answers,answers_per_task,error_rate,mnad\n";
    for (const Checkpoint& cp : run.checkpoints) {
        out << cp.answers << ',' << format_double(cp.answers_per_task) << ',';
        if (cp.error_rate) out << format_double(*cp.error_rate);
        out << ',';
        if (cp.mnad) out << format_double(*cp.mnad);
        out << '\n';
    }
}

}  // namespace crowdtab
