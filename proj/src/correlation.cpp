// Column-pair error correlation: Pearson weights over errors that share a
// (worker, row), maximum-likelihood conditional fits per kind combination,
// and the structure-aware answer model
//   P(e_ij^u | E_i^u) = sum_k W_jk P(e_j | e_k = e_ik^u) / sum_k W_jk.

#include "crowdtab/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "crowdtab/worker_model.hpp"

namespace crowdtab {
namespace {

constexpr double kVarFloor = 1e-9;   // keeps conditional normals usable
constexpr double kVarZero = 1e-15;   // below this a margin counts as degenerate

bool error_bit(double e) { return e > 0.5; }

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // population variance
    std::size_t n = 0;
};

Moments fit_moments(const std::vector<double>& xs) {
    Moments m;
    m.n = xs.size();
    if (m.n == 0) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(m.n);
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(m.n);
    return m;
}

double normal_pdf(double x, double mean, double var) {
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    return kInvSqrt2Pi / std::sqrt(var) * std::exp(-(x - mean) * (x - mean) / (2.0 * var));
}

}  // namespace

std::vector<std::vector<ErrorSample>> error_samples(const TableSchema& schema,
                                                    const AnswerSet& answers,
                                                    const std::vector<double>& estimates_internal) {
    if (estimates_internal.size() != schema.cell_count())
        throw std::invalid_argument("estimates size does not match the schema");
    std::vector<std::vector<ErrorSample>> out(schema.column_count());
    for (const Answer& a : answers.all()) {
        const double est = estimates_internal[schema.cell_index(a.row, a.col)];
        double e;
        if (schema.column(a.col).is_categorical()) {
            e = (a.label() == static_cast<std::size_t>(std::llround(est))) ? 0.0 : 1.0;
        } else {
            e = a.value - est;
        }
        out[a.col].push_back(ErrorSample{a.worker, a.row, e});
    }
    return out;
}

bool CorrelationModel::has_any_conditional() const {
    return std::any_of(conditionals.begin(), conditionals.end(),
                       [](const PairConditional& c) { return c.present; });
}

CorrelationModel fit_correlations(const TableSchema& schema, const AnswerSet& answers,
                                  const std::vector<double>& estimates_internal) {
    const std::uint32_t m = schema.column_count();
    CorrelationModel model;
    model.columns = m;
    model.weights.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (std::uint32_t j = 0; j < m; ++j) {
        model.weights[static_cast<std::size_t>(j) * m + j] = 1.0;  // self-correlation
    }
    model.marginals.assign(m, ErrorMarginal{});
    model.conditionals.assign(static_cast<std::size_t>(m) * m, PairConditional{});

    const auto samples = error_samples(schema, answers, estimates_internal);
    for (std::uint32_t j = 0; j < m; ++j) {
        if (samples[j].empty()) continue;
        std::vector<double> es;
        es.reserve(samples[j].size());
        for (const ErrorSample& s : samples[j]) es.push_back(s.error);
        const Moments mo = fit_moments(es);
        ErrorMarginal& marg = model.marginals[j];
        marg.present = true;
        if (schema.column(j).is_categorical()) {
            marg.p = mo.mean;
        } else {
            marg.mean = mo.mean;
            marg.var = std::max(mo.var, kVarFloor);
        }
    }

    // Group errors by (worker, row) to extract per-pair joint samples.
    std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint32_t, double>>> groups;
    for (std::uint32_t j = 0; j < m; ++j) {
        for (const ErrorSample& s : samples[j]) {
            const std::uint64_t key = (static_cast<std::uint64_t>(s.worker) << 32) | s.row;
            groups[key].push_back({j, s.error});
        }
    }
    // pairs[j * m + k]: list of (e_j, e_k) observations.
    std::vector<std::vector<std::pair<double, double>>> pairs(static_cast<std::size_t>(m) * m);
    for (const auto& [key, cols] : groups) {
        for (std::size_t a = 0; a < cols.size(); ++a) {
            for (std::size_t b = 0; b < cols.size(); ++b) {
                if (a == b) continue;
                pairs[static_cast<std::size_t>(cols[a].first) * m + cols[b].first].push_back(
                    {cols[a].second, cols[b].second});
            }
        }
    }

    for (std::uint32_t j = 0; j < m; ++j) {
        for (std::uint32_t k = 0; k < m; ++k) {
            if (j == k) continue;
            const auto& pjk = pairs[static_cast<std::size_t>(j) * m + k];
            if (pjk.size() < 2) continue;
            std::vector<double> ej, ek;
            ej.reserve(pjk.size());
            ek.reserve(pjk.size());
            for (const auto& [a, b] : pjk) {
                ej.push_back(a);
                ek.push_back(b);
            }
            const Moments mj = fit_moments(ej);
            const Moments mk = fit_moments(ek);
            if (mj.var <= kVarZero || mk.var <= kVarZero) continue;  // degenerate margin
            double cov = 0.0;
            for (std::size_t t = 0; t < pjk.size(); ++t)
                cov += (ej[t] - mj.mean) * (ek[t] - mk.mean);
            cov /= static_cast<double>(pjk.size());
            const double rho = std::clamp(cov / std::sqrt(mj.var * mk.var), -1.0, 1.0);
            model.weights[static_cast<std::size_t>(j) * m + k] = rho;

            PairConditional& c = model.conditionals[static_cast<std::size_t>(j) * m + k];
            c.present = true;
            const bool j_cat = schema.column(j).is_categorical();
            const bool k_cat = schema.column(k).is_categorical();
            if (j_cat && k_cat) {
                double n[2] = {0, 0}, hits[2] = {0, 0};
                for (std::size_t t = 0; t < pjk.size(); ++t) {
                    const int b = error_bit(ek[t]) ? 1 : 0;
                    n[b] += 1.0;
                    hits[b] += error_bit(ej[t]) ? 1.0 : 0.0;
                }
                // mk.var > 0 guarantees both bits occur among the pairs
                c.p_given[0] = hits[0] / n[0];
                c.p_given[1] = hits[1] / n[1];
            } else if (!j_cat && !k_cat) {
                c.mean_j = mj.mean;
                c.mean_k = mk.mean;
                c.var_j = std::max(mj.var, kVarFloor);
                c.var_k = std::max(mk.var, kVarFloor);
                c.rho = rho;
            } else if (!j_cat && k_cat) {
                // Normal fit of e_j within each e_k bit.
                std::vector<double> split[2];
                for (std::size_t t = 0; t < pjk.size(); ++t)
                    split[error_bit(ek[t]) ? 1 : 0].push_back(ej[t]);
                for (int b = 0; b < 2; ++b) {
                    const Moments ms = fit_moments(split[b]);
                    c.split_mean[b] = ms.mean;
                    c.split_var[b] = std::max(ms.var, kVarFloor);
                }
            } else {
                // Categorical j given continuous k: store the normal fit of
                // e_k within each e_j bit plus the margins, inverted by Bayes
                // at query time.
                std::vector<double> split[2];
                for (std::size_t t = 0; t < pjk.size(); ++t)
                    split[error_bit(ej[t]) ? 1 : 0].push_back(ek[t]);
                for (int b = 0; b < 2; ++b) {
                    const Moments ms = fit_moments(split[b]);
                    c.split_mean[b] = ms.mean;
                    c.split_var[b] = std::max(ms.var, kVarFloor);
                }
                c.p_marginal = mj.mean;
                c.mean_k = mk.mean;
                c.var_k = std::max(mk.var, kVarFloor);
            }
        }
    }
    return model;
}

double categorical_error_given(const PairConditional& c, bool k_categorical, double x) {
    if (!c.present) throw std::invalid_argument("conditional is absent");
    if (k_categorical) return c.p_given[error_bit(x) ? 1 : 0];
    // Bayes: P(e_j=1 | e_k=x) = P(e_j=1) f(x | e_j=1) / f(x), with f the
    // fitted marginal of e_k. Clamped; the fitted densities need not cohere.
    const double num = c.p_marginal * normal_pdf(x, c.split_mean[1], c.split_var[1]);
    const double den = normal_pdf(x, c.mean_k, c.var_k);
    if (!(den > 0.0)) return c.p_marginal;
    return std::clamp(num / den, 0.0, 1.0);
}

NormalMoments continuous_error_given(const PairConditional& c, bool k_categorical, double x) {
    if (!c.present) throw std::invalid_argument("conditional is absent");
    if (k_categorical) {
        const int b = error_bit(x) ? 1 : 0;
        return NormalMoments{c.split_mean[b], c.split_var[b]};
    }
    const double sd_ratio = std::sqrt(c.var_j / c.var_k);
    const double mean = c.mean_j + sd_ratio * c.rho * (x - c.mean_k);
    const double var = std::max((1.0 - c.rho * c.rho) * c.var_j, kVarFloor);
    return NormalMoments{mean, var};
}

AnswerDistribution inherent_answer_distribution(const TableSchema& schema,
                                                const ModelParams& params,
                                                const std::vector<double>& estimates_internal,
                                                WorkerId worker, std::uint32_t row,
                                                std::uint32_t col) {
    const double est = estimates_internal[schema.cell_index(row, col)];
    AnswerDistribution dist;
    if (schema.column(col).is_categorical()) {
        const std::size_t n_labels = schema.column(col).label_count();
        const double q = worker_quality(params, worker, row, col);
        const auto hit = static_cast<std::size_t>(std::llround(est));
        dist.categorical = true;
        dist.label_probs.assign(n_labels, (1.0 - q) / static_cast<double>(n_labels - 1));
        dist.label_probs[hit] = q;
    } else {
        dist.components.push_back({1.0, est, cell_variance(params, worker, row, col)});
    }
    return dist;
}

AnswerDistribution conditional_answer_distribution(const TableSchema& schema,
                                                   const AnswerSet& answers,
                                                   const ModelParams& params,
                                                   const CorrelationModel& model,
                                                   const std::vector<double>& estimates_internal,
                                                   WorkerId worker, std::uint32_t row,
                                                   std::uint32_t col) {
    if (model.columns != schema.column_count())
        throw std::invalid_argument("correlation model does not match the schema");
    // Observed errors of this worker elsewhere in the row, restricted to
    // columns with a usable conditional into `col`.
    struct Observed {
        std::uint32_t k;
        double error;
        double weight;
    };
    std::vector<Observed> obs;
    double weight_sum = 0.0;
    if (worker < answers.worker_count()) {
        for (std::uint32_t id : answers.worker_answers(worker)) {
            const Answer& a = answers.at(id);
            if (a.row != row || a.col == col) continue;
            if (!model.conditional(col, a.col).present) continue;
            const double est_k = estimates_internal[schema.cell_index(row, a.col)];
            double e;
            if (schema.column(a.col).is_categorical()) {
                e = (a.label() == static_cast<std::size_t>(std::llround(est_k))) ? 0.0 : 1.0;
            } else {
                e = a.value - est_k;
            }
            obs.push_back({a.col, e, model.weight(col, a.col)});
            weight_sum += model.weight(col, a.col);
        }
    }
    if (obs.empty() || !(weight_sum > 0.0)) {
        return inherent_answer_distribution(schema, params, estimates_internal, worker, row, col);
    }

    const double est = estimates_internal[schema.cell_index(row, col)];
    AnswerDistribution dist;
    if (schema.column(col).is_categorical()) {
        double p_err = 0.0;
        for (const Observed& o : obs) {
            const bool k_cat = schema.column(o.k).is_categorical();
            p_err += o.weight / weight_sum *
                     categorical_error_given(model.conditional(col, o.k), k_cat, o.error);
        }
        p_err = std::clamp(p_err, 0.0, 1.0);  // signed weights can overshoot
        const std::size_t n_labels = schema.column(col).label_count();
        const auto hit = static_cast<std::size_t>(std::llround(est));
        dist.categorical = true;
        dist.label_probs.assign(n_labels, p_err / static_cast<double>(n_labels - 1));
        dist.label_probs[hit] = 1.0 - p_err;
    } else {
        for (const Observed& o : obs) {
            const bool k_cat = schema.column(o.k).is_categorical();
            const NormalMoments nm =
                continuous_error_given(model.conditional(col, o.k), k_cat, o.error);
            dist.components.push_back({o.weight / weight_sum, est + nm.mean, nm.var});
        }
    }
    return dist;
}

}  // namespace crowdtab
