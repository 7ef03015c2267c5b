// Online task assignment by expected entropy reduction. The gain of handing
// cell c_ij to worker u is
//   IG = H(T_ij | A) - E_a[ H(T_ij | A + a) ],
// the expectation running over the worker's predicted answer: the inherent
// model around the point estimate, or, structure-aware, the correlation-
// weighted conditional on the worker's errors elsewhere in the row. Each
// hypothetical answer is scored through the same local update rule the live
// system applies when an answer arrives.

#include "crowdtab/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "crowdtab/entropy.hpp"
#include "crowdtab/worker_model.hpp"

namespace crowdtab {
namespace {

constexpr double kPhiClampLo = 0.01;
constexpr double kPhiClampHi = 100.0;

// Inverse standard normal CDF by bisection on erf; accurate to ~1e-13.
double normal_quantile(double p) {
    double lo = -12.0, hi = 12.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * (1.0 + std::erf(mid / std::sqrt(2.0)));
        (cdf < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<CellRef> eligible_cells(const InferenceState& state, WorkerId worker) {
    std::vector<CellRef> cells;
    for (std::uint32_t i = 0; i < state.schema.row_count; ++i) {
        for (std::uint32_t j = 0; j < state.schema.column_count(); ++j) {
            if (!state.answers.has_answered(worker, i, j)) cells.push_back({i, j});
        }
    }
    return cells;
}

// Top-k cells by score, descending, ties toward smaller (row, col).
std::vector<CellRef> top_k(std::vector<std::pair<double, CellRef>> scored, int k) {
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if (a.second.row != b.second.row) return a.second.row < b.second.row;
        return a.second.col < b.second.col;
    });
    std::vector<CellRef> out;
    for (std::size_t t = 0; t < scored.size() && t < static_cast<std::size_t>(k); ++t)
        out.push_back(scored[t].second);
    return out;
}

}  // namespace

void AssignmentConfig::validate() const {
    if (s_cont < 1) throw std::invalid_argument("s_cont must be at least 1");
    if (batch_k < 1) throw std::invalid_argument("batch_k must be at least 1");
}

double posterior_entropy(const TruthDistribution& t) {
    return t.is_categorical() ? shannon_entropy(t.probs()) : normal_entropy(t.variance());
}

const std::vector<double>& standard_normal_quantiles(int s) {
    if (s < 1) throw std::invalid_argument("need at least one quantile");
    thread_local std::map<int, std::vector<double>> cache;
    auto it = cache.find(s);
    if (it == cache.end()) {
        std::vector<double> qs(s);
        for (int m = 0; m < s; ++m)
            qs[m] = normal_quantile((m + 0.5) / static_cast<double>(s));
        it = cache.emplace(s, std::move(qs)).first;
    }
    return it->second;
}

namespace {

// Scores hypothetical answers for one (worker, cell) pair. The worker set on
// the cell and the patched parameter block are the same for every outcome an
// expectation enumerates, so they are built once; each evaluation restores
// the phi entries its refits touched instead of recopying all parameters.
class HypotheticalScorer {
  public:
    HypotheticalScorer(const InferenceState& state, const Answer& probe)
        : state_(state),
          cell_(state.schema.cell_index(probe.row, probe.col)),
          patched_(state.params) {
        for (std::uint32_t id : state.answers.cell_answers(probe.row, probe.col))
            workers_.push_back(state.answers.at(id).worker);
        workers_.push_back(probe.worker);
        std::sort(workers_.begin(), workers_.end());
        workers_.erase(std::unique(workers_.begin(), workers_.end()), workers_.end());
        if (probe.worker >= patched_.phi.size()) patched_.phi.resize(probe.worker + 1, 1.0);
        base_phi_.reserve(workers_.size());
        for (WorkerId u : workers_) base_phi_.push_back(patched_.phi[u]);
    }

    double entropy(const Answer& answer) {
        const TruthDistribution refreshed = cell_posterior(
            state_.schema, state_.answers, state_.params, answer.row, answer.col, &answer);
        for (WorkerId u : workers_) {
            const Answer* extra = (u == answer.worker) ? &answer : nullptr;
            double phi = refit_worker_phi(state_.schema, state_.answers, state_.truths,
                                          patched_, u, state_.config, extra, &refreshed, cell_);
            const std::size_t count =
                state_.answers.worker_answers(u).size() + (u == answer.worker ? 1 : 0);
            if (count < 2) phi = std::clamp(phi, kPhiClampLo, kPhiClampHi);
            patched_.phi[u] = phi;
        }
        const double h = posterior_entropy(cell_posterior(
            state_.schema, state_.answers, patched_, answer.row, answer.col, &answer));
        for (std::size_t t = 0; t < workers_.size(); ++t)
            patched_.phi[workers_[t]] = base_phi_[t];
        return h;
    }

  private:
    const InferenceState& state_;
    std::size_t cell_;
    ModelParams patched_;
    std::vector<WorkerId> workers_;
    std::vector<double> base_phi_;
};

}  // namespace

double hypothetical_cell_entropy(const InferenceState& state, const Answer& answer) {
    HypotheticalScorer scorer(state, answer);
    return scorer.entropy(answer);
}

double expected_gain(const InferenceState& state, WorkerId worker, std::uint32_t row,
                     std::uint32_t col, const AnswerDistribution& dist, int s_cont) {
    const double h0 = posterior_entropy(state.truths[state.schema.cell_index(row, col)]);
    HypotheticalScorer scorer(state, Answer{worker, row, col, 0.0});
    double expected = 0.0;
    if (dist.categorical) {
        for (std::size_t z = 0; z < dist.label_probs.size(); ++z) {
            const double p = dist.label_probs[z];
            if (p <= 0.0) continue;
            const Answer hyp{worker, row, col, static_cast<double>(z)};
            expected += p * scorer.entropy(hyp);
        }
    } else {
        const std::vector<double>& zq = standard_normal_quantiles(s_cont);
        for (const AnswerDistribution::Component& c : dist.components) {
            const double sd = std::sqrt(c.var);
            for (double z : zq) {
                const Answer hyp{worker, row, col, c.mean + sd * z};
                expected += c.weight / static_cast<double>(s_cont) * scorer.entropy(hyp);
            }
        }
    }
    return h0 - expected;
}

double inherent_gain(const InferenceState& state, std::uint32_t row, std::uint32_t col,
                     WorkerId worker, const AssignmentConfig& config) {
    config.validate();
    const std::vector<double> est = point_estimates_internal(state);
    const AnswerDistribution dist =
        inherent_answer_distribution(state.schema, state.params, est, worker, row, col);
    return expected_gain(state, worker, row, col, dist, config.s_cont);
}

double structure_aware_gain(const InferenceState& state, const CorrelationModel& model,
                            std::uint32_t row, std::uint32_t col, WorkerId worker,
                            const AssignmentConfig& config) {
    config.validate();
    const std::vector<double> est = point_estimates_internal(state);
    const AnswerDistribution dist = conditional_answer_distribution(
        state.schema, state.answers, state.params, model, est, worker, row, col);
    return expected_gain(state, worker, row, col, dist, config.s_cont);
}

double batch_gain(const InferenceState& state, const CorrelationModel* model,
                  const std::vector<CellRef>& cells, WorkerId worker,
                  const AssignmentConfig& config) {
    double total = 0.0;
    for (const CellRef& c : cells) {
        total += (model != nullptr)
                     ? structure_aware_gain(state, *model, c.row, c.col, worker, config)
                     : inherent_gain(state, c.row, c.col, worker, config);
    }
    return total;
}

TaskSelector::TaskSelector(AssignmentConfig config) : config_(config), rng_(config.seed) {
    config_.validate();
}

std::vector<CellRef> TaskSelector::select(const InferenceState& state,
                                          const CorrelationModel* model, WorkerId worker) {
    std::vector<CellRef> eligible = eligible_cells(state, worker);
    if (eligible.empty()) return {};
    const int k = config_.batch_k;

    switch (config_.policy) {
        case Policy::Random: {
            // Partial Fisher-Yates over the (row, col)-ordered eligible list.
            std::vector<CellRef> out;
            const std::size_t picks = std::min<std::size_t>(k, eligible.size());
            for (std::size_t t = 0; t < picks; ++t) {
                std::uniform_int_distribution<std::size_t> pick(t, eligible.size() - 1);
                std::swap(eligible[t], eligible[pick(rng_)]);
                out.push_back(eligible[t]);
            }
            return out;
        }
        case Policy::Looping: {
            // Global cyclic cursor over cells in row-major order, shared by
            // all workers; skips cells this worker already answered.
            const std::uint64_t total = state.schema.cell_count();
            std::vector<CellRef> out;
            for (std::uint64_t step = 0;
                 step < total && out.size() < static_cast<std::size_t>(k); ++step) {
                const std::uint64_t idx = (loop_cursor_ + step) % total;
                const auto i = static_cast<std::uint32_t>(idx / state.schema.column_count());
                const auto j = static_cast<std::uint32_t>(idx % state.schema.column_count());
                if (!state.answers.has_answered(worker, i, j)) {
                    out.push_back({i, j});
                    loop_cursor_ = (idx + 1) % total;
                }
            }
            return out;
        }
        case Policy::Entropy: {
            std::vector<std::pair<double, CellRef>> scored;
            scored.reserve(eligible.size());
            for (const CellRef& c : eligible) {
                scored.push_back(
                    {posterior_entropy(state.truths[state.schema.cell_index(c.row, c.col)]), c});
            }
            return top_k(std::move(scored), k);
        }
        case Policy::InherentIG:
        case Policy::StructureAwareIG: {
            const bool structural = config_.policy == Policy::StructureAwareIG && model != nullptr;
            const std::vector<double> est = point_estimates_internal(state);
            std::vector<std::pair<double, CellRef>> scored;
            scored.reserve(eligible.size());
            for (const CellRef& c : eligible) {
                const AnswerDistribution dist =
                    structural ? conditional_answer_distribution(state.schema, state.answers,
                                                                 state.params, *model, est, worker,
                                                                 c.row, c.col)
                               : inherent_answer_distribution(state.schema, state.params, est,
                                                              worker, c.row, c.col);
                scored.push_back(
                    {expected_gain(state, worker, c.row, c.col, dist, config_.s_cont), c});
            }
            return top_k(std::move(scored), k);
        }
    }
    return {};
}

}  // namespace crowdtab
