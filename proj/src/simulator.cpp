// Synthetic benchmark harness: table generation, worker-model answer
// synthesis, answer corruption, and the online assignment loop that produces
// error-vs-budget curves.

#include "crowdtab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "crowdtab/correlation.hpp"
#include "crowdtab/metrics.hpp"
#include "crowdtab/worker_model.hpp"

namespace crowdtab {
namespace {

constexpr double kContinuousLo = 0.0;
constexpr double kContinuousHi = 1000.0;
constexpr double kDifficultyLogSd = 0.25;

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

void GeneratorConfig::validate() const {
    if (rows < 1 || cols < 1 || worker_count < 1 || answers_per_task < 1)
        throw std::invalid_argument("generator counts must be at least 1");
    if (!(cat_ratio >= 0.0 && cat_ratio <= 1.0))
        throw std::invalid_argument("cat_ratio must lie in [0,1]");
    if (!(mean_difficulty > 0.0)) throw std::invalid_argument("mean_difficulty must be positive");
    if (!(phi_log_sd >= 0.0)) throw std::invalid_argument("phi_log_sd must be non-negative");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (answers_per_task > worker_count)
        throw std::invalid_argument("answers_per_task cannot exceed the worker pool");
}

void NoiseConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0,1]");
}

SyntheticTable generate_table(const GeneratorConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);

    const auto n_cat = static_cast<std::uint32_t>(config.cat_ratio * config.cols);
    TableSchema schema;
    schema.row_count = config.rows;
    std::uniform_int_distribution<int> label_count_dist(2, 10);
    for (std::uint32_t j = 0; j < config.cols; ++j) {
        Column c;
        c.index = j;
        if (j < n_cat) {
            c.name = "cat_" + std::to_string(j);
            c.kind = ColumnKind::Categorical;
            const int n_labels = label_count_dist(rng);
            for (int l = 0; l < n_labels; ++l) c.labels.push_back("v" + std::to_string(l));
        } else {
            c.name = "cont_" + std::to_string(j);
            c.kind = ColumnKind::Continuous;
            c.lo = kContinuousLo;
            c.hi = kContinuousHi;
        }
        schema.columns.push_back(std::move(c));
    }
    schema.key_attribute = "row";
    schema.validate();

    GroundTruth truth(schema.cell_count());
    std::uniform_real_distribution<double> cont_truth(kContinuousLo, kContinuousHi);
    for (std::uint32_t i = 0; i < config.rows; ++i) {
        for (std::uint32_t j = 0; j < config.cols; ++j) {
            const Column& c = schema.column(j);
            if (c.is_categorical()) {
                std::uniform_int_distribution<std::size_t> pick(0, c.label_count() - 1);
                truth.set(schema.cell_index(i, j), static_cast<double>(pick(rng)));
            } else {
                truth.set(schema.cell_index(i, j), cont_truth(rng));
            }
        }
    }

    // Difficulties: lognormal spread, rescaled so mean(alpha) = 1 and
    // mean(beta) = mean_difficulty, giving mean(alpha_i beta_j) the target.
    std::lognormal_distribution<double> diff_dist(0.0, kDifficultyLogSd);
    std::vector<double> alpha(config.rows), beta(config.cols);
    for (double& a : alpha) a = diff_dist(rng);
    for (double& b : beta) b = diff_dist(rng);
    const double am = mean_of(alpha), bm = mean_of(beta);
    for (double& a : alpha) a /= am;
    for (double& b : beta) b *= config.mean_difficulty / bm;

    std::lognormal_distribution<double> phi_dist(config.phi_log_mean, config.phi_log_sd);
    std::vector<double> worker_phi(config.worker_count);
    for (double& p : worker_phi) p = phi_dist(rng);

    std::vector<double> column_scale(config.cols, 1.0);
    for (std::uint32_t j = 0; j < config.cols; ++j) {
        if (!schema.column(j).is_categorical())
            column_scale[j] = (kContinuousHi - kContinuousLo) / std::sqrt(12.0);
    }
    return SyntheticTable{std::move(schema), std::move(truth),    std::move(alpha),
                          std::move(beta),   std::move(worker_phi), std::move(column_scale),
                          config.epsilon};
}

Answer synthesize_answer(const SyntheticTable& table, WorkerId worker, std::uint32_t row,
                         std::uint32_t col, std::mt19937_64& rng) {
    const double var_std = table.alpha[row] * table.beta[col] * table.worker_phi[worker];
    const Column& c = table.schema.column(col);
    const double t = table.truth.value(table.schema.cell_index(row, col));
    if (c.is_categorical()) {
        const double q = clamp_quality(quality_from_variance(table.epsilon, var_std));
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        auto label = static_cast<std::size_t>(std::llround(t));
        if (coin(rng) >= q) {
            std::uniform_int_distribution<std::size_t> wrong(0, c.label_count() - 2);
            std::size_t w = wrong(rng);
            if (w >= label) w++;  // skip the true label
            label = w;
        }
        return Answer{worker, row, col, static_cast<double>(label)};
    }
    std::normal_distribution<double> noise(0.0, std::sqrt(var_std) * table.column_scale[col]);
    return Answer{worker, row, col, t + noise(rng)};
}

AnswerSet generate_answers(const SyntheticTable& table, const GeneratorConfig& config) {
    config.validate();
    // Distinct stream from generate_table so the pair is reproducible from
    // one seed without coupling draw counts.
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    AnswerSet answers(table.schema);
    std::vector<WorkerId> pool(config.worker_count);
    for (std::uint32_t u = 0; u < config.worker_count; ++u) pool[u] = u;

    for (std::uint32_t i = 0; i < table.schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < table.schema.column_count(); ++j) {
            for (std::uint32_t t = 0; t < config.answers_per_task; ++t) {
                std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
                std::swap(pool[t], pool[pick(rng)]);
                answers.add(synthesize_answer(table, pool[t], i, j, rng));
            }
        }
    }
    return answers;
}

AnswerSet inject_noise(const AnswerSet& answers, const TableSchema& schema,
                       const NoiseConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);

    // Column statistics are frozen from the input set.
    const std::uint32_t m = schema.column_count();
    std::vector<double> mean(m, 0.0), sd(m, 0.0);
    {
        std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
        std::vector<std::size_t> count(m, 0);
        for (const Answer& a : answers.all()) {
            if (schema.column(a.col).is_categorical()) continue;
            sum[a.col] += a.value;
            sum_sq[a.col] += a.value * a.value;
            count[a.col]++;
        }
        for (std::uint32_t j = 0; j < m; ++j) {
            if (count[j] == 0) continue;
            mean[j] = sum[j] / static_cast<double>(count[j]);
            const double var = sum_sq[j] / static_cast<double>(count[j]) - mean[j] * mean[j];
            sd[j] = var > 0.0 ? std::sqrt(var) : 0.0;
        }
    }

    std::vector<Answer> modified(answers.all().begin(), answers.all().end());
    const auto n_perturb =
        static_cast<std::size_t>(std::ceil(static_cast<double>(modified.size()) * config.gamma));
    if (!modified.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, modified.size() - 1);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t t = 0; t < n_perturb; ++t) {
            Answer& a = modified[pick(rng)];
            const Column& c = schema.column(a.col);
            if (c.is_categorical()) {
                std::uniform_int_distribution<std::size_t> label(0, c.label_count() - 1);
                a.value = static_cast<double>(label(rng));
            } else if (sd[a.col] > 0.0) {
                const double z = (a.value - mean[a.col]) / sd[a.col];
                a.value = mean[a.col] + (z + gauss(rng)) * sd[a.col];
            }
        }
    }

    AnswerSet out(schema);
    for (const Answer& a : modified) out.add(a);
    return out;
}

void SimulationConfig::validate() const {
    assignment.validate();
    inference.validate();
    if (budget < 1) throw std::invalid_argument("budget must be at least 1");
    if (initial_answers_per_task < 0)
        throw std::invalid_argument("initial seeding cannot be negative");
    if (!(checkpoint_answers_per_task > 0.0))
        throw std::invalid_argument("checkpoint cadence must be positive");
}

SimulationRun run_simulation(const SyntheticTable& table, const SimulationConfig& config) {
    config.validate();
    const TableSchema& schema = table.schema;
    const std::size_t cells = schema.cell_count();

    std::mt19937_64 master(config.seed);
    const std::uint64_t selector_seed = master();
    std::mt19937_64 synth_rng(master());

    AssignmentConfig assign_cfg = config.assignment;
    assign_cfg.seed = selector_seed;
    TaskSelector selector(assign_cfg);

    std::vector<WorkerId> arrivals = config.arrival_sequence;
    if (arrivals.empty()) {
        arrivals.resize(table.worker_phi.size());
        for (std::size_t u = 0; u < arrivals.size(); ++u)
            arrivals[u] = static_cast<WorkerId>(u);
    }
    std::size_t arrival_cursor = 0;
    auto next_worker = [&]() {
        const WorkerId u = arrivals[arrival_cursor % arrivals.size()];
        arrival_cursor++;
        return u;
    };

    SimulationRun run;
    AnswerSet raw(schema);

    // Seeding: every task gets the configured number of answers, workers
    // drawn from the arrival sequence.
    const auto per_task = static_cast<std::size_t>(std::llround(config.initial_answers_per_task));
    for (std::size_t rep = 0; rep < per_task && run.answers_collected < config.budget; ++rep) {
        for (std::uint32_t i = 0; i < schema.row_count && run.answers_collected < config.budget;
             ++i) {
            for (std::uint32_t j = 0;
                 j < schema.column_count() && run.answers_collected < config.budget; ++j) {
                WorkerId u = next_worker();
                std::size_t tries = 1;
                while (raw.has_answered(u, i, j) && tries < arrivals.size()) {
                    u = next_worker();
                    tries++;
                }
                if (raw.has_answered(u, i, j)) continue;  // every worker already has this cell
                raw.add(synthesize_answer(table, u, i, j, synth_rng));
                run.answers_collected++;
            }
        }
    }

    InferenceState state = run_em(raw, schema, config.inference);
    CorrelationModel model =
        fit_correlations(schema, state.answers, point_estimates_internal(state));

    const auto cadence = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(config.checkpoint_answers_per_task * static_cast<double>(cells))));
    std::size_t last_checkpoint = run.answers_collected;

    auto checkpoint = [&]() {
        const std::vector<double> estimates = extract_truth(state);
        Checkpoint cp;
        cp.answers = run.answers_collected;
        cp.answers_per_task =
            static_cast<double>(run.answers_collected) / static_cast<double>(cells);
        cp.error_rate = error_rate(schema, estimates, table.truth);
        cp.mnad = mnad(schema, raw, estimates, table.truth);
        run.checkpoints.push_back(cp);
        last_checkpoint = run.answers_collected;
    };

    std::size_t consecutive_empty = 0;
    while (run.answers_collected < config.budget) {
        const WorkerId u = next_worker();
        const std::vector<CellRef> tasks = selector.select(state, &model, u);
        if (tasks.empty()) {
            if (++consecutive_empty >= arrivals.size()) {
                run.exhausted = true;  // nobody has an unanswered cell left
                break;
            }
            continue;
        }
        consecutive_empty = 0;
        for (const CellRef& c : tasks) {
            if (run.answers_collected >= config.budget) break;
            const Answer a = synthesize_answer(table, u, c.row, c.col, synth_rng);
            raw.add(a);
            state = incremental_update(std::move(state), a);
            run.answers_collected++;
            if (run.answers_collected - last_checkpoint >= cadence) {
                state = run_em(raw, schema, config.inference);
                model = fit_correlations(schema, state.answers, point_estimates_internal(state));
                checkpoint();
            }
        }
    }

    // Final refit and checkpoint unless one just happened at this count.
    if (run.checkpoints.empty() || last_checkpoint != run.answers_collected) {
        state = run_em(raw, schema, config.inference);
        model = fit_correlations(schema, state.answers, point_estimates_internal(state));
        checkpoint();
    }
    return run;
}

}  // namespace crowdtab
