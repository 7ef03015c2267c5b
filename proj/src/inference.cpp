// EM truth inference over mixed categorical/continuous tables.
//
// E-step: with worker answer variance alpha_i * beta_j * phi_u, the
// continuous posterior is conjugate-normal,
//   var  = ( sum_u 1/(alpha beta phi_u) + 1/var0 )^-1
//   mean = ( sum_u a_u/(alpha beta phi_u) + mean0/var0 ) * var,
// and the categorical posterior is the normalized product of per-answer
// likelihoods q or (1-q)/(|L|-1), where q = erf(eps / sqrt(2 alpha beta phi)).
//
// M-step: ascent on the expected complete-data log-likelihood Q in
// log-parameter space. Each continuous answer contributes
//   -log(2 pi v)/2 - s/(2v),  v = alpha beta phi,  s = (a - mean)^2 + var,
// whose derivative with respect to each of log alpha, log beta, log phi is
// -1/2 + s/(2v). A categorical answer contributes
//   P ln q + (1 - P) ln((1-q)/(|L|-1)),  P = posterior prob of the answered
// label, with dq/dlog v = -(g/sqrt(pi)) exp(-g^2), g = eps/sqrt(2v).
// Because an answer ties its row, column, and worker factors together, raw
// gradient steps zig-zag; the ascent direction is rescaled by the diagonal
// curvature (per-coordinate Newton) with step halving guarding monotonicity.

#include "crowdtab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "crowdtab/worker_model.hpp"

namespace crowdtab {
namespace {

constexpr double kPhiClampLo = 0.01;
constexpr double kPhiClampHi = 100.0;

// Workers start optimistic (quality erf(0.5/sqrt(0.2)) ~ 0.89 at the default
// epsilon). The uniform-truth start is a degenerate EM fixed point: quality
// 1/|L| makes every categorical posterior uniform, which refits quality to
// 1/|L|. Initial parameters on the pessimistic side of that point (phi = 1
// gives quality 0.38 < 1/2) select the label-inverted basin instead of the
// answer-consistent one, so the starting point must sit well above chance.
constexpr double kInitialWorkerVariance = 0.1;

// Compensated (Kahan) accumulator for long objective reductions.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

std::vector<std::uint32_t> answers_per_worker(const AnswerSet& answers, std::size_t workers) {
    std::vector<std::uint32_t> counts(workers, 0);
    for (const Answer& a : answers.all()) counts[a.worker]++;
    return counts;
}

// Clamps phi for workers whose own answers cannot identify it.
void clamp_underdetermined_phi(std::vector<double>& phi, const std::vector<std::uint32_t>& counts) {
    for (std::size_t u = 0; u < phi.size(); ++u) {
        if (counts[u] < 2) phi[u] = std::clamp(phi[u], kPhiClampLo, kPhiClampHi);
    }
}

// First and second derivatives of one answer's Q term with respect to
// log v, v = alpha beta phi. Each of log alpha_i, log beta_j, log phi_u
// shifts log v one-for-one, so these are also the per-coordinate
// contributions to the gradient and the diagonal curvature.
struct TermDerivs {
    double d1;
    double d2;
};

TermDerivs answer_logv_derivs(const TableSchema& schema, const Answer& a,
                              const TruthDistribution& t, double v, double epsilon) {
    constexpr double kInvSqrtPi = 0.5641895835477563;
    if (!schema.column(a.col).is_categorical()) {
        const double d = a.value - t.mean();
        const double s = d * d + t.variance();
        return {-0.5 + s / (2.0 * v), -s / (2.0 * v)};
    }
    const double q = clamp_quality(quality_from_variance(epsilon, v));
    const double p = t.probs()[a.label()];
    const double g = epsilon / std::sqrt(2.0 * v);
    const double gauss = kInvSqrtPi * std::exp(-g * g);
    const double dq = -g * gauss;                            // dq/dlog v
    const double d2q = 0.5 * g * gauss * (1.0 - 2.0 * g * g);  // d2q/dlog v2
    const double df = p / q - (1.0 - p) / (1.0 - q);
    const double d2f = -p / (q * q) - (1.0 - p) / ((1.0 - q) * (1.0 - q));
    return {df * dq, d2f * dq * dq + df * d2q};
}

TruthDistribution posterior_from_answers(const TableSchema& schema, const ModelParams& params,
                                         std::uint32_t row, std::uint32_t col,
                                         const std::vector<const Answer*>& cell) {
    const Column& column = schema.column(col);
    if (column.is_categorical()) {
        const std::size_t n_labels = column.label_count();
        if (cell.empty()) {
            return TruthDistribution::categorical(
                std::vector<double>(n_labels, 1.0 / static_cast<double>(n_labels)));
        }
        // Log-space product of answer likelihoods; the uniform prior cancels
        // in the normalization.
        std::vector<double> log_w(n_labels, 0.0);
        for (const Answer* a : cell) {
            const double q = clamp_quality(worker_quality(params, a->worker, row, col));
            const double log_hit = std::log(q);
            const double log_miss =
                std::log((1.0 - q) / static_cast<double>(n_labels - 1));
            for (std::size_t z = 0; z < n_labels; ++z) {
                log_w[z] += (a->label() == z) ? log_hit : log_miss;
            }
        }
        const double max_lw = *std::max_element(log_w.begin(), log_w.end());
        std::vector<double> probs(n_labels);
        double norm = 0.0;
        for (std::size_t z = 0; z < n_labels; ++z) {
            probs[z] = std::exp(log_w[z] - max_lw);
            norm += probs[z];
        }
        for (double& p : probs) p /= norm;
        return TruthDistribution::categorical(std::move(probs));
    }

    const ColumnPrior& prior = params.priors[col];
    double precision = 1.0 / prior.variance;
    double weighted = prior.mean / prior.variance;
    for (const Answer* a : cell) {
        const double v = cell_variance(params, a->worker, row, col);
        precision += 1.0 / v;
        weighted += a->value / v;
    }
    const double var = 1.0 / precision;
    return TruthDistribution::normal(weighted * var, var);
}

}  // namespace

void InferenceConfig::validate() const {
    if (!(convergence_threshold > 0.0)) throw std::invalid_argument("convergence_threshold must be positive");
    if (max_em_iterations < 1) throw std::invalid_argument("max_em_iterations must be at least 1");
    if (!(gd_step > 0.0)) throw std::invalid_argument("gd_step must be positive");
    if (gd_max_iterations < 1) throw std::invalid_argument("gd_max_iterations must be at least 1");
    if (!(gd_tolerance > 0.0)) throw std::invalid_argument("gd_tolerance must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

TruthDistribution cell_posterior(const TableSchema& schema, const AnswerSet& answers,
                                 const ModelParams& params, std::uint32_t row, std::uint32_t col,
                                 const Answer* extra) {
    std::vector<const Answer*> cell;
    for (std::uint32_t id : answers.cell_answers(row, col)) cell.push_back(&answers.at(id));
    if (extra != nullptr) {
        if (extra->row != row || extra->col != col)
            throw std::invalid_argument("hypothetical answer targets a different cell");
        cell.push_back(extra);
    }
    return posterior_from_answers(schema, params, row, col, cell);
}

std::vector<TruthDistribution> e_step(const TableSchema& schema, const AnswerSet& answers,
                                      const ModelParams& params) {
    std::vector<TruthDistribution> truths;
    truths.reserve(schema.cell_count());
    std::vector<const Answer*> cell;
    for (std::uint32_t i = 0; i < schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < schema.column_count(); ++j) {
            cell.clear();
            for (std::uint32_t id : answers.cell_answers(i, j)) cell.push_back(&answers.at(id));
            truths.push_back(posterior_from_answers(schema, params, i, j, cell));
        }
    }
    return truths;
}

double m_step_objective(const TableSchema& schema, const AnswerSet& answers,
                        const std::vector<TruthDistribution>& truths, const ModelParams& params) {
    if (truths.size() != schema.cell_count())
        throw std::invalid_argument("truths size does not match the schema");
    constexpr double kLog2Pi = 1.8378770664093453;
    KahanSum q_sum;
    for (std::uint32_t i = 0; i < schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < schema.column_count(); ++j) {
            const Column& column = schema.column(j);
            const TruthDistribution& t = truths[schema.cell_index(i, j)];
            if (column.is_categorical()) {
                // E[ln 1/|L|] from the uniform prior.
                q_sum.add(-std::log(static_cast<double>(column.label_count())));
                const double miss_div = static_cast<double>(column.label_count() - 1);
                for (std::uint32_t id : answers.cell_answers(i, j)) {
                    const Answer& a = answers.at(id);
                    const double q = clamp_quality(worker_quality(params, a.worker, i, j));
                    const double p = t.probs()[a.label()];
                    q_sum.add(p * std::log(q) +
                              (1.0 - p) * std::log((1.0 - q) / miss_div));
                }
            } else {
                const ColumnPrior& prior = params.priors[j];
                const double dm = t.mean() - prior.mean;
                q_sum.add(-0.5 * (kLog2Pi + std::log(prior.variance)) -
                          (dm * dm + t.variance()) / (2.0 * prior.variance));
                for (std::uint32_t id : answers.cell_answers(i, j)) {
                    const Answer& a = answers.at(id);
                    const double v = cell_variance(params, a.worker, i, j);
                    const double d = a.value - t.mean();
                    const double s = d * d + t.variance();
                    q_sum.add(-0.5 * (kLog2Pi + std::log(v)) - s / (2.0 * v));
                }
            }
        }
    }
    return q_sum.sum;
}

ObjectiveGradients m_step_gradients(const TableSchema& schema, const AnswerSet& answers,
                                    const std::vector<TruthDistribution>& truths,
                                    const ModelParams& params) {
    if (truths.size() != schema.cell_count())
        throw std::invalid_argument("truths size does not match the schema");
    ObjectiveGradients g;
    g.log_alpha.assign(params.alpha.size(), 0.0);
    g.log_beta.assign(params.beta.size(), 0.0);
    g.log_phi.assign(params.phi.size(), 0.0);
    for (const Answer& a : answers.all()) {
        const TruthDistribution& t = truths[schema.cell_index(a.row, a.col)];
        const double v = cell_variance(params, a.worker, a.row, a.col);
        const double d1 = answer_logv_derivs(schema, a, t, v, params.epsilon).d1;
        g.log_alpha[a.row] += d1;
        g.log_beta[a.col] += d1;
        g.log_phi[a.worker] += d1;
    }
    return g;
}

ModelParams m_step(const TableSchema& schema, const AnswerSet& answers,
                   const std::vector<TruthDistribution>& truths, ModelParams params,
                   const InferenceConfig& config) {
    config.validate();
    params.validate();
    const auto counts = answers_per_worker(answers, params.phi.size());
    clamp_underdetermined_phi(params.phi, counts);

    auto evaluate = [&](const ModelParams& p) {
        return m_step_objective(schema, answers, truths, p);
    };
    double q_current = evaluate(params);
    ModelParams best = params;
    int consecutive_drops = 0;
    double step_init = 1.0;  // full preconditioned step first

    const std::size_t dims = params.alpha.size() + params.beta.size() + params.phi.size();
    std::vector<double> grad(dims), curv(dims), dir(dims);

    for (int it = 0; it < config.gd_max_iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(curv.begin(), curv.end(), 0.0);
        const std::size_t beta_base = params.alpha.size();
        const std::size_t phi_base = beta_base + params.beta.size();
        for (const Answer& a : answers.all()) {
            const TruthDistribution& t = truths[schema.cell_index(a.row, a.col)];
            const double v = cell_variance(params, a.worker, a.row, a.col);
            const TermDerivs d = answer_logv_derivs(schema, a, t, v, params.epsilon);
            grad[a.row] += d.d1;
            curv[a.row] += d.d2;
            grad[beta_base + a.col] += d.d1;
            curv[beta_base + a.col] += d.d2;
            grad[phi_base + a.worker] += d.d1;
            curv[phi_base + a.worker] += d.d2;
        }

        double grad_norm = 0.0;
        for (double v : grad) grad_norm = std::max(grad_norm, std::abs(v));
        if (grad_norm < 1e-10) break;

        // Newton scaling where the term is concave, a conservative gradient
        // step elsewhere. Positive scaling keeps this an ascent direction.
        for (std::size_t k = 0; k < dims; ++k) {
            dir[k] = curv[k] < -1e-9 ? grad[k] / -curv[k] : grad[k] * config.gd_step;
        }

        auto step_to = [&](double step) {
            ModelParams cand = params;
            for (std::size_t i = 0; i < cand.alpha.size(); ++i)
                cand.alpha[i] = std::exp(std::log(cand.alpha[i]) + step * dir[i]);
            for (std::size_t j = 0; j < cand.beta.size(); ++j)
                cand.beta[j] = std::exp(std::log(cand.beta[j]) + step * dir[beta_base + j]);
            for (std::size_t u = 0; u < cand.phi.size(); ++u)
                cand.phi[u] = std::exp(std::log(cand.phi[u]) + step * dir[phi_base + u]);
            clamp_underdetermined_phi(cand.phi, counts);
            return cand;
        };

        double step = step_init;
        ModelParams cand = step_to(step);
        double q_new = evaluate(cand);
        int halvings = 0;
        while (!(q_new >= q_current) && halvings < 40) {
            step *= 0.5;
            cand = step_to(step);
            q_new = evaluate(cand);
            ++halvings;
        }

        if (!(q_new >= q_current)) {
            // No improving step found even at a tiny scale.
            if (!(q_new >= q_current - config.gd_tolerance)) {
                if (++consecutive_drops >= 3)
                    throw OptimizationError("M-step objective diverged", best);
                continue;  // skip the update, try a fresh gradient
            }
            break;  // flat within tolerance: converged
        }
        consecutive_drops = 0;
        const double gain = q_new - q_current;
        params = std::move(cand);
        q_current = q_new;
        best = params;
        step_init = std::min(step * 2.0, 1.0);
        if (gain < 1e-12 * (1.0 + std::abs(q_current))) break;
    }

    params.normalize_difficulties();
    clamp_underdetermined_phi(params.phi, counts);
    return params;
}

InferenceState run_em(const AnswerSet& answers, const TableSchema& schema,
                      const InferenceConfig& config) {
    config.validate();
    if (answers.empty()) throw std::invalid_argument("cannot run inference without answers");

    InferenceState state{schema,
                         AnswerSet(schema),
                         Standardizer::fit(schema, answers),
                         ModelParams::ones(answers.worker_count(), schema.row_count,
                                           schema.column_count(), config.epsilon),
                         {},
                         0.0,
                         0,
                         {},
                         config};
    for (const Answer& a : answers.all()) state.answers.add(state.standardizer.to_internal(a));

    // Priors: empirical moments of the standardized answers per column.
    const std::uint32_t m = schema.column_count();
    std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    for (const Answer& a : state.answers.all()) {
        if (schema.column(a.col).is_categorical()) continue;
        sum[a.col] += a.value;
        sum_sq[a.col] += a.value * a.value;
        count[a.col]++;
    }
    for (std::uint32_t j = 0; j < m; ++j) {
        if (schema.column(j).is_categorical() || count[j] == 0) continue;
        const double mean = sum[j] / static_cast<double>(count[j]);
        double var = sum_sq[j] / static_cast<double>(count[j]) - mean * mean;
        if (!(var > 1e-12)) var = 1.0;  // degenerate column: fall back to unit variance
        state.params.priors[j] = ColumnPrior{mean, var};
    }

    // Truths start at the prior-anchored posteriors under the optimistic
    // initial parameters (the bare prior for unanswered cells); each
    // iteration then refits parameters and refreshes the posteriors.
    state.params.phi.assign(state.params.phi.size(), kInitialWorkerVariance);
    state.truths = e_step(schema, state.answers, state.params);

    for (int it = 1; it <= config.max_em_iterations; ++it) {
        const ModelParams prev = state.params;
        state.params = m_step(schema, state.answers, state.truths, state.params, config);
        state.truths = e_step(schema, state.answers, state.params);
        state.objective = m_step_objective(schema, state.answers, state.truths, state.params);
        state.objective_history.push_back(state.objective);
        state.iterations = it;

        double delta = 0.0;
        for (std::size_t k = 0; k < prev.alpha.size(); ++k)
            delta = std::max(delta, std::abs(prev.alpha[k] - state.params.alpha[k]));
        for (std::size_t k = 0; k < prev.beta.size(); ++k)
            delta = std::max(delta, std::abs(prev.beta[k] - state.params.beta[k]));
        for (std::size_t k = 0; k < prev.phi.size(); ++k)
            delta = std::max(delta, std::abs(prev.phi[k] - state.params.phi[k]));
        if (delta < config.convergence_threshold) break;
    }
    return state;
}

std::vector<double> extract_truth(const InferenceState& state) {
    std::vector<double> out;
    out.reserve(state.truths.size());
    for (std::uint32_t i = 0; i < state.schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < state.schema.column_count(); ++j) {
            const TruthDistribution& t = state.truths[state.schema.cell_index(i, j)];
            if (t.is_categorical()) {
                out.push_back(static_cast<double>(t.argmax_label()));
            } else {
                out.push_back(state.standardizer.from_internal(j, t.mean()));
            }
        }
    }
    return out;
}

std::vector<double> point_estimates_internal(const InferenceState& state) {
    std::vector<double> out;
    out.reserve(state.truths.size());
    for (const TruthDistribution& t : state.truths) out.push_back(t.point_estimate());
    return out;
}

double refit_worker_phi(const TableSchema& schema, const AnswerSet& answers,
                        const std::vector<TruthDistribution>& truths, const ModelParams& params,
                        WorkerId worker, const InferenceConfig& config, const Answer* extra,
                        const TruthDistribution* override_truth, std::size_t override_cell) {
    constexpr double kLog2Pi = 1.8378770664093453;
    constexpr double kInvSqrtPi = 0.5641895835477563;

    // The restricted Q depends on phi only through each answer's variance
    // v = (alpha_i beta_j) phi, so everything fixed for the whole ascent is
    // collected once up front. Continuous answers collapse entirely: their
    // joint contribution is C - n/2 log(phi) - R/(2 phi) for precomputed
    // scalars, leaving per-evaluation transcendentals to categorical answers
    // alone. This runs inside the assignment scorer's innermost loop.
    struct CatTerm {
        double z1;    // epsilon / sqrt(2 alpha_i beta_j); z = z1 / sqrt(phi)
        double p;     // truth mass on the answered label
        double miss;  // label_count - 1
    };
    thread_local std::vector<CatTerm> cats;
    cats.clear();
    double cont_count = 0.0;
    KahanSum cont_base;      // sum of -(log 2 pi + log(alpha_i beta_j)) / 2
    KahanSum cont_residual;  // sum of ((a - mean)^2 + var) / (alpha_i beta_j)
    auto add_term = [&](const Answer& a) {
        const std::size_t cell = schema.cell_index(a.row, a.col);
        const TruthDistribution& t = (override_truth != nullptr && cell == override_cell)
                                         ? *override_truth
                                         : truths[cell];
        const double scale = params.alpha[a.row] * params.beta[a.col];
        if (schema.column(a.col).is_categorical()) {
            cats.push_back({params.epsilon / std::sqrt(2.0 * scale), t.probs()[a.label()],
                            static_cast<double>(schema.column(a.col).label_count() - 1)});
        } else {
            const double d = a.value - t.mean();
            cont_count += 1.0;
            cont_base.add(-0.5 * (kLog2Pi + std::log(scale)));
            cont_residual.add((d * d + t.variance()) / scale);
        }
    };
    for (std::uint32_t id : answers.worker_answers(worker)) add_term(answers.at(id));
    if (extra != nullptr) {
        if (extra->worker != worker)
            throw std::invalid_argument("hypothetical answer belongs to a different worker");
        add_term(*extra);
    }

    // Q restricted to this worker's answers and its d/d log phi, in one pass.
    struct Eval {
        double value;
        double grad;
    };
    auto evaluate = [&](double phi_u) {
        const double inv_sqrt_phi = 1.0 / std::sqrt(phi_u);
        KahanSum value;
        double grad = 0.0;
        for (const CatTerm& term : cats) {
            const double z = term.z1 * inv_sqrt_phi;
            const double q = clamp_quality(std::erf(z));
            value.add(term.p * std::log(q) +
                      (1.0 - term.p) * std::log((1.0 - q) / term.miss));
            const double inner = term.p / q - (1.0 - term.p) / (1.0 - q);
            grad += inner * -z * kInvSqrtPi * std::exp(-z * z);
        }
        if (cont_count > 0.0) {
            const double half_residual = 0.5 * cont_residual.sum / phi_u;
            value.add(cont_base.sum - 0.5 * cont_count * std::log(phi_u) - half_residual);
            grad += -0.5 * cont_count + half_residual;
        }
        return Eval{value.sum, grad};
    };

    double phi = params.phi[worker];
    double log_phi = std::log(phi);
    Eval cur = evaluate(phi);
    for (int it = 0; it < config.gd_max_iterations; ++it) {
        if (std::abs(cur.grad) < 1e-12) break;
        double step = config.gd_step;
        double cand_log = log_phi + step * cur.grad;
        double cand = std::exp(cand_log);
        Eval next = evaluate(cand);
        int halvings = 0;
        while (!(next.value >= cur.value) && halvings < 40) {
            step *= 0.5;
            cand_log = log_phi + step * cur.grad;
            cand = std::exp(cand_log);
            next = evaluate(cand);
            ++halvings;
        }
        if (!(next.value >= cur.value)) break;
        const double gain = next.value - cur.value;
        phi = cand;
        log_phi = cand_log;
        cur = next;
        if (gain < config.gd_tolerance) break;
    }
    return phi;
}

InferenceState incremental_update(InferenceState state, const Answer& new_answer) {
    const Answer internal = state.standardizer.to_internal(new_answer);
    if (internal.worker >= state.params.phi.size()) {
        state.params.phi.resize(internal.worker + 1, 1.0);
    }
    state.answers.add(internal);

    const std::uint32_t i = internal.row;
    const std::uint32_t j = internal.col;
    state.truths[state.schema.cell_index(i, j)] =
        cell_posterior(state.schema, state.answers, state.params, i, j);

    // Locally refit phi for each worker who touched this cell, holding
    // difficulties, other workers, and all posteriors fixed.
    const auto counts = answers_per_worker(state.answers, state.params.phi.size());
    std::vector<WorkerId> cell_workers;
    for (std::uint32_t id : state.answers.cell_answers(i, j))
        cell_workers.push_back(state.answers.at(id).worker);
    std::sort(cell_workers.begin(), cell_workers.end());

    for (WorkerId u : cell_workers) {
        double phi = refit_worker_phi(state.schema, state.answers, state.truths, state.params, u,
                                      state.config);
        if (counts[u] < 2) phi = std::clamp(phi, kPhiClampLo, kPhiClampHi);
        state.params.phi[u] = phi;
    }

    // Refresh the cell posterior under the refitted reliabilities.
    state.truths[state.schema.cell_index(i, j)] =
        cell_posterior(state.schema, state.answers, state.params, i, j);
    return state;
}

}  // namespace crowdtab
