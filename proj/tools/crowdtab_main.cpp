// Command-line front end: dataset generation, truth inference, baseline
// aggregation, evaluation, noise injection, and the assignment simulator.
// Exit codes: 0 success, 2 invalid input, 3 optimization failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crowdtab/baselines.hpp"
#include "crowdtab/correlation.hpp"
#include "crowdtab/io.hpp"
#include "crowdtab/metrics.hpp"
#include "crowdtab/simulator.hpp"

namespace {

namespace fs = std::filesystem;
using namespace crowdtab;

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitOptimizationFailure = 3;

Policy parse_policy(const std::string& name) {
    if (name == "random") return Policy::Random;
    if (name == "looping") return Policy::Looping;
    if (name == "entropy") return Policy::Entropy;
    if (name == "ig") return Policy::InherentIG;
    if (name == "saig") return Policy::StructureAwareIG;
    throw CLI::ValidationError("--policy", "unknown policy '" + name + "'");
}

std::string out_path(const std::string& out_dir, const std::string& file) {
    fs::create_directories(out_dir);
    return (fs::path(out_dir) / file).string();
}

// Estimate vectors as the writers expect them: reporting scale plus
// standardized scale, both per cell.
void write_inference_outputs(const std::string& out_dir, const Dataset& ds,
                             const InferenceState& state) {
    const std::vector<double> est = extract_truth(state);
    const std::vector<double> est_std = point_estimates_internal(state);
    std::vector<std::optional<double>> est_opt(est.begin(), est.end());
    std::vector<std::optional<double>> est_std_opt(est_std.begin(), est_std.end());
    write_estimates_csv(out_path(out_dir, "estimates.csv"), ds.schema, est_opt, est_std_opt);
    write_worker_quality_csv(out_path(out_dir, "worker_quality.csv"), state.params,
                             ds.worker_names);
    write_difficulty_csv(out_path(out_dir, "difficulty.csv"), ds.schema, state.params);
}

int cmd_generate(const GeneratorConfig& config, const std::string& out_dir) {
    const SyntheticTable table = generate_table(config);
    const AnswerSet answers = generate_answers(table, config);
    std::vector<std::string> worker_names;
    for (std::uint32_t u = 0; u < config.worker_count; ++u)
        worker_names.push_back("w" + std::to_string(u));
    save_schema(out_path(out_dir, "schema.json"), table.schema);
    save_answers(out_path(out_dir, "answers.csv"), table.schema, answers, worker_names);
    save_truth(out_path(out_dir, "truth.csv"), table.schema, table.truth);
    return kExitOk;
}

int cmd_infer(const std::string& schema_path, const std::string& answers_path,
              const InferenceConfig& config, const std::string& out_dir) {
    const Dataset ds = load_dataset(schema_path, answers_path);
    const InferenceState state = run_em(ds.answers, ds.schema, config);
    write_inference_outputs(out_dir, ds, state);
    return kExitOk;
}

int cmd_baseline(const std::string& schema_path, const std::string& answers_path,
                 const std::optional<std::string>& truth_path, const std::string& method,
                 const std::string& out_dir) {
    if (method != "mv" && method != "median" && method != "both")
        throw CLI::ValidationError("--method", "expected mv, median, or both");
    const Dataset ds = load_dataset(schema_path, answers_path, truth_path);
    std::vector<std::optional<double>> est = baseline_estimates(ds.schema, ds.answers);
    for (std::uint32_t j = 0; j < ds.schema.column_count(); ++j) {
        const bool keep = method == "both" ||
                          (method == "mv" && ds.schema.column(j).is_categorical()) ||
                          (method == "median" && !ds.schema.column(j).is_categorical());
        if (keep) continue;
        for (std::uint32_t i = 0; i < ds.schema.row_count; ++i)
            est[ds.schema.cell_index(i, j)].reset();
    }
    write_estimates_csv(out_path(out_dir, "estimates.csv"), ds.schema, est,
                        std::vector<std::optional<double>>(est.size()));
    if (ds.has_truth) {
        // Restrict scoring to cells the baseline actually estimated.
        GroundTruth covered(ds.schema.cell_count());
        std::vector<double> full(ds.schema.cell_count(), 0.0);
        for (std::size_t cell = 0; cell < est.size(); ++cell) {
            if (est[cell] && ds.truth.known(cell)) {
                covered.set(cell, ds.truth.value(cell));
                full[cell] = *est[cell];
            }
        }
        write_metrics_csv(out_path(out_dir, "metrics.csv"),
                          {{method, error_rate(ds.schema, full, covered),
                            mnad(ds.schema, ds.answers, full, covered)}});
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& schema_path, const std::string& answers_path,
                 const std::string& estimates_path, const std::string& truth_path,
                 const std::string& out_dir) {
    const Dataset ds = load_dataset(schema_path, answers_path, truth_path);
    const std::vector<std::optional<double>> est = load_estimates_csv(estimates_path, ds.schema);
    GroundTruth covered(ds.schema.cell_count());
    std::vector<double> full(ds.schema.cell_count(), 0.0);
    for (std::size_t cell = 0; cell < est.size(); ++cell) {
        if (est[cell] && ds.truth.known(cell)) {
            covered.set(cell, ds.truth.value(cell));
            full[cell] = *est[cell];
        }
    }
    const MetricsRow row{"estimates", error_rate(ds.schema, full, covered),
                         mnad(ds.schema, ds.answers, full, covered)};
    write_metrics_csv(out_path(out_dir, "metrics.csv"), {row});
    std::cout << "error_rate="
              << (row.error_rate ? format_double(*row.error_rate) : std::string("absent"))
              << " mnad=" << (row.mnad ? format_double(*row.mnad) : std::string("absent"))
              << "\n";
    return kExitOk;
}

int cmd_noise(const std::string& schema_path, const std::string& answers_path,
              const NoiseConfig& config, const std::string& out_dir) {
    Dataset ds = load_dataset(schema_path, answers_path);
    const AnswerSet noisy = inject_noise(ds.answers, ds.schema, config);
    save_answers(out_path(out_dir, "answers.csv"), ds.schema, noisy, ds.worker_names);
    return kExitOk;
}

int cmd_simulate(const GeneratorConfig& gen, SimulationConfig sim, const std::string& out_dir) {
    const SyntheticTable table = generate_table(gen);
    const SimulationRun run = run_simulation(table, sim);
    write_curve_csv(out_path(out_dir, "curve.csv"), run);
    if (!run.checkpoints.empty()) {
        const Checkpoint& last = run.checkpoints.back();
        write_metrics_csv(out_path(out_dir, "metrics.csv"),
                          {{"simulation", last.error_rate, last.mnad}});
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic truth inference and task assignment over mixed-type tables"};
    app.require_subcommand(1);

    GeneratorConfig gen;
    InferenceConfig inf;
    NoiseConfig noise;
    SimulationConfig sim;
    std::string out_dir = ".";
    std::string schema_path, answers_path, estimates_path, truth_path;
    std::string method = "both", policy_name = "saig";
    std::optional<std::string> opt_truth;
    std::uint64_t seed = 0;

    auto add_gen_flags = [&](CLI::App* cmd) {
        cmd->add_option("--rows", gen.rows, "table rows");
        cmd->add_option("--cols", gen.cols, "table columns");
        cmd->add_option("--ratio", gen.cat_ratio, "categorical column ratio");
        cmd->add_option("--difficulty", gen.mean_difficulty, "mean of alpha_i * beta_j");
        cmd->add_option("--workers", gen.worker_count, "worker pool size");
        cmd->add_option("--answers-per-task", gen.answers_per_task, "answers per cell");
    };

    CLI::App* generate = app.add_subcommand("generate", "synthesize a dataset");
    add_gen_flags(generate);
    generate->add_option("--epsilon", gen.epsilon, "quality window");
    generate->add_option("--seed", seed, "RNG seed");
    generate->add_option("--out-dir", out_dir, "output directory");

    CLI::App* infer = app.add_subcommand("infer", "run truth inference");
    infer->add_option("--schema", schema_path, "schema JSON")->required();
    infer->add_option("--answers", answers_path, "answers CSV")->required();
    infer->add_option("--epsilon", inf.epsilon, "quality window");
    infer->add_option("--threshold", inf.convergence_threshold, "EM convergence threshold");
    infer->add_option("--max-iterations", inf.max_em_iterations, "EM iteration cap");
    infer->add_option("--out-dir", out_dir, "output directory");

    CLI::App* baseline = app.add_subcommand("baseline", "majority vote / median aggregation");
    baseline->add_option("--schema", schema_path, "schema JSON")->required();
    baseline->add_option("--answers", answers_path, "answers CSV")->required();
    baseline->add_option("--truth", truth_path, "ground truth CSV");
    baseline->add_option("--method", method, "mv, median, or both");
    baseline->add_option("--out-dir", out_dir, "output directory");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score estimates against ground truth");
    evaluate->add_option("--schema", schema_path, "schema JSON")->required();
    evaluate->add_option("--answers", answers_path, "answers CSV")->required();
    evaluate->add_option("--estimates", estimates_path, "estimates CSV")->required();
    evaluate->add_option("--truth", truth_path, "ground truth CSV")->required();
    evaluate->add_option("--out-dir", out_dir, "output directory");

    CLI::App* noise_cmd = app.add_subcommand("noise", "perturb a fraction of answers");
    noise_cmd->add_option("--schema", schema_path, "schema JSON")->required();
    noise_cmd->add_option("--answers", answers_path, "answers CSV")->required();
    noise_cmd->add_option("--gamma", noise.gamma, "fraction of answers perturbed")->required();
    noise_cmd->add_option("--seed", seed, "RNG seed");
    noise_cmd->add_option("--out-dir", out_dir, "output directory");

    CLI::App* simulate = app.add_subcommand("simulate", "online assignment benchmark");
    add_gen_flags(simulate);
    simulate->add_option("--policy", policy_name, "random|looping|entropy|ig|saig");
    simulate->add_option("--budget", sim.budget, "total answers to collect");
    simulate->add_option("--k", sim.assignment.batch_k, "tasks per worker arrival");
    simulate->add_option("--s-cont", sim.assignment.s_cont, "continuous answer samples");
    simulate->add_option("--epsilon", inf.epsilon, "quality window");
    simulate->add_option("--threshold", inf.convergence_threshold, "EM convergence threshold");
    simulate->add_option("--seed", seed, "RNG seed");
    simulate->add_option("--out-dir", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalidInput;
    }

    try {
        if (generate->parsed()) {
            gen.seed = seed;
            return cmd_generate(gen, out_dir);
        }
        if (infer->parsed()) {
            return cmd_infer(schema_path, answers_path, inf, out_dir);
        }
        if (baseline->parsed()) {
            if (!truth_path.empty()) opt_truth = truth_path;
            return cmd_baseline(schema_path, answers_path, opt_truth, method, out_dir);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(schema_path, answers_path, estimates_path, truth_path, out_dir);
        }
        if (noise_cmd->parsed()) {
            noise.seed = seed;
            return cmd_noise(schema_path, answers_path, noise, out_dir);
        }
        if (simulate->parsed()) {
            gen.seed = seed;
            gen.epsilon = inf.epsilon;
            sim.seed = seed;
            sim.inference = inf;
            sim.assignment.policy = parse_policy(policy_name);
            return cmd_simulate(gen, sim, out_dir);
        }
    } catch (const OptimizationError& e) {
        std::cerr << "optimization failure: " << e.what() << "\n";
        return kExitOptimizationFailure;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    }
    return kExitOk;
}
