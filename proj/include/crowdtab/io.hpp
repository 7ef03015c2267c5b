#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdtab/answers.hpp"
#include "crowdtab/inference.hpp"
#include "crowdtab/params.hpp"
#include "crowdtab/schema.hpp"
#include "crowdtab/simulator.hpp"

namespace crowdtab {

// Parse failure carrying the offending file and 1-based line (0 = whole file).
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string path, std::size_t line, const std::string& what);

    std::string path;
    std::size_t line;
};

// A loaded table: schema, answers with workers mapped to dense ids in
// first-seen order, and optional ground truth.
struct Dataset {
    TableSchema schema;
    AnswerSet answers;
    std::vector<std::string> worker_names;  // index = WorkerId
    GroundTruth truth;
    bool has_truth = false;
};

// Schema JSON: {"columns": [{"name", "kind": "categorical"|"continuous",
// "labels": [...] | "range": [lo, hi]}], "key": ..., "rows": N}. A missing
// "rows" leaves row_count 0, to be inferred from the data files.
TableSchema load_schema(const std::string& path);
void save_schema(const std::string& path, const TableSchema& schema);

// Answers CSV: header worker,row,col,value; columns referenced by name,
// categorical values by exact label string. Truth CSV: row,col,value.
Dataset load_dataset(const std::string& schema_path, const std::string& answers_path,
                     const std::optional<std::string>& truth_path = std::nullopt);
void save_answers(const std::string& path, const TableSchema& schema, const AnswerSet& answers,
                  const std::vector<std::string>& worker_names);
void save_truth(const std::string& path, const TableSchema& schema, const GroundTruth& truth);

// estimates.csv: row,col,value,value_std. Continuous cells carry both the
// reporting-scale and the standardized posterior mean; categorical cells the
// label string and its index. `estimates` may omit cells (no answers).
void write_estimates_csv(const std::string& path, const TableSchema& schema,
                         const std::vector<std::optional<double>>& estimates,
                         const std::vector<std::optional<double>>& estimates_std);

// Estimates read back keyed by cell; values on the reporting scale.
std::vector<std::optional<double>> load_estimates_csv(const std::string& path,
                                                      const TableSchema& schema);

// worker_quality.csv: worker,phi,quality with quality = erf(eps/sqrt(2 phi)).
void write_worker_quality_csv(const std::string& path, const ModelParams& params,
                              const std::vector<std::string>& worker_names);

// difficulty.csv: kind,index,difficulty for every row (alpha) and column (beta).
void write_difficulty_csv(const std::string& path, const TableSchema& schema,
                          const ModelParams& params);

struct MetricsRow {
    std::string method;
    std::optional<double> error_rate;
    std::optional<double> mnad;
};
// metrics.csv: method,error_rate,mnad; absent metrics serialize as empty.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

// curve.csv: answers,answers_per_task,error_rate,mnad per checkpoint.
void write_curve_csv(const std::string& path, const SimulationRun& run);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

}  // namespace crowdtab
