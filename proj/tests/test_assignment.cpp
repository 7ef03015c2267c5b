#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <random>
#include <stdexcept>
#include <vector>

#include "crowdtab/assignment.hpp"
#include "crowdtab/entropy.hpp"
#include "crowdtab/inference.hpp"
#include "test_util.hpp"

using namespace crowdtab;
using namespace crowdtab::testutil;

namespace {

// State with posteriors freshly derived from the given answers; the answers
// are taken to be on the model scale already.
InferenceState make_state(const TableSchema& schema, AnswerSet answers, ModelParams params) {
    InferenceState st{schema, std::move(answers), Standardizer::identity(schema),
                      std::move(params), {}, 0.0, 0, {}, InferenceConfig{}};
    st.truths = e_step(st.schema, st.answers, st.params);
    return st;
}

CorrelationModel empty_model(std::uint32_t columns) {
    CorrelationModel m;
    m.columns = columns;
    m.weights.assign(static_cast<std::size_t>(columns) * columns, 0.0);
    m.marginals.assign(columns, ErrorMarginal{});
    m.conditionals.assign(static_cast<std::size_t>(columns) * columns, PairConditional{});
    return m;
}

// Shannon entropy of a zero-mean normal discretized to bins of width delta.
double discretized_normal_entropy(double var, double delta) {
    const double sd = std::sqrt(var);
    const double denom = sd * std::sqrt(2.0);
    double h = 0.0;
    for (double x = -8.0 * sd; x <= 8.0 * sd; x += delta) {
        const double p =
            0.5 * (std::erf((x + 0.5 * delta) / denom) - std::erf((x - 0.5 * delta) / denom));
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

}  // namespace

TEST_CASE("posterior entropy covers labels and normals") {
    CHECK(posterior_entropy(TruthDistribution::categorical({0.25, 0.25, 0.25, 0.25})) ==
          doctest::Approx(std::log(4.0)));
    CHECK(posterior_entropy(TruthDistribution::categorical({1.0, 0.0, 0.0})) == 0.0);
    const double unit_entropy_var = std::exp(-2.837877066409345);  // 1 / (2 pi e)
    CHECK(std::abs(posterior_entropy(TruthDistribution::normal(0.0, unit_entropy_var))) < 1e-12);

    CHECK(shannon_entropy({0.5, 0.5}) == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(shannon_entropy({-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(normal_entropy(0.0), std::invalid_argument);
    CHECK(uniform_entropy(4) == doctest::Approx(std::log(4.0)));
    CHECK_THROWS_AS(uniform_entropy(0), std::invalid_argument);
}

TEST_CASE("standard normal quantiles are symmetric equal-mass points") {
    const auto& q1 = standard_normal_quantiles(1);
    REQUIRE(q1.size() == 1);
    CHECK(std::abs(q1[0]) < 1e-12);  // median

    const auto& q2 = standard_normal_quantiles(2);
    CHECK(q2[0] == doctest::Approx(-0.6744897501960817).epsilon(1e-9));
    CHECK(q2[1] == doctest::Approx(0.6744897501960817).epsilon(1e-9));

    const auto& q10 = standard_normal_quantiles(10);
    REQUIRE(q10.size() == 10);
    CHECK(q10[0] == doctest::Approx(-1.6448536269514722).epsilon(1e-9));
    for (int m = 0; m < 10; ++m) {
        CHECK(q10[m] == doctest::Approx(-q10[9 - m]).epsilon(1e-9));
        const double cdf = 0.5 * (1.0 + std::erf(q10[m] / std::sqrt(2.0)));
        CHECK(cdf == doctest::Approx((m + 0.5) / 10.0).epsilon(1e-9));
        if (m > 0) CHECK(q10[m] > q10[m - 1]);
    }

    CHECK_THROWS_AS(standard_normal_quantiles(0), std::invalid_argument);
}

TEST_CASE("inherent gain matches the closed form on a fresh binary cell") {
    // Uniform binary posterior, one worker with quality 0.8 and no history:
    // either answer lands the posterior on (0.8, 0.2), so the expected
    // entropy drop is ln 2 - H(0.8).
    TableSchema s = make_schema(1, {cat_column(0, "label", 2)});
    ModelParams p = ModelParams::ones(1, 1, 1);
    p.phi[0] = phi_for_quality(0.5, 0.8);
    InferenceState st = make_state(s, AnswerSet(s), std::move(p));
    REQUIRE(st.truths[0].probs() == std::vector<double>{0.5, 0.5});

    const double h_after = -(0.8 * std::log(0.8) + 0.2 * std::log(0.2));
    const double gain = inherent_gain(st, 0, 0, 0, AssignmentConfig{});
    CHECK(gain == doctest::Approx(std::log(2.0) - h_after).epsilon(1e-6));
    CHECK(gain == doctest::Approx(0.6931 - 0.5004).epsilon(1e-3));
}

TEST_CASE("a chance-level worker brings no gain") {
    TableSchema s = make_schema(1, {cat_column(0, "label", 2)});
    ModelParams p = ModelParams::ones(1, 1, 1);
    p.phi[0] = phi_for_quality(0.5, 0.5);  // coin flip on two labels
    InferenceState st = make_state(s, AnswerSet(s), std::move(p));
    CHECK(std::abs(inherent_gain(st, 0, 0, 0, AssignmentConfig{})) < 1e-9);
}

TEST_CASE("continuous gain is positive and falls with worker variance") {
    TableSchema s = make_schema(1, {cont_column(0, "x", -100, 100)});
    std::vector<double> gains;
    for (double phi : {0.05, 0.2, 1.0, 5.0}) {
        ModelParams p = ModelParams::ones(1, 1, 1);
        p.phi[0] = phi;
        InferenceState st = make_state(s, AnswerSet(s), std::move(p));
        gains.push_back(inherent_gain(st, 0, 0, 0, AssignmentConfig{}));
    }
    CHECK(gains.back() > 0.0);
    for (std::size_t t = 1; t < gains.size(); ++t) CHECK(gains[t] < gains[t - 1]);
}

TEST_CASE("structure-aware gain reduces to the inherent gain without signal") {
    TableSchema s = make_schema(1, {cat_column(0, "a", 2), cat_column(1, "b", 2)});
    AnswerSet a(s);
    a.add({1, 0, 0, 0.0});
    a.add({0, 0, 1, 1.0});
    ModelParams p = ModelParams::ones(2, 1, 2);
    p.phi[0] = phi_for_quality(0.5, 0.8);
    p.phi[1] = phi_for_quality(0.5, 0.95);
    InferenceState st = make_state(s, std::move(a), std::move(p));
    const AssignmentConfig cfg{};

    SUBCASE("empty correlation model") {
        const CorrelationModel none =
            fit_correlations(s, st.answers, point_estimates_internal(st));
        CHECK_FALSE(none.has_any_conditional());
        CHECK(structure_aware_gain(st, none, 0, 0, 0, cfg) == inherent_gain(st, 0, 0, 0, cfg));
    }
    SUBCASE("worker without row context") {
        CorrelationModel m = empty_model(2);
        m.weights[0 * 2 + 1] = 0.9;
        m.conditionals[0 * 2 + 1].present = true;
        m.conditionals[0 * 2 + 1].p_given[1] = 0.95;
        // Worker 1 answered nothing else in this row beyond the target cell.
        CHECK(structure_aware_gain(st, m, 0, 1, 1, cfg) == inherent_gain(st, 0, 1, 1, cfg));
    }
    SUBCASE("null model in the selector routes to inherent scores") {
        AssignmentConfig c1;
        c1.policy = Policy::StructureAwareIG;
        c1.batch_k = 2;
        AssignmentConfig c2 = c1;
        c2.policy = Policy::InherentIG;
        TaskSelector sa(c1), ig(c2);
        CHECK(sa.select(st, nullptr, 0) == ig.select(st, nullptr, 0));
    }
}

TEST_CASE("structure-aware gain reads the worker's row errors") {
    // Worker 0 disagreed with the consensus on column 1; a strong error
    // correlation into column 0 should reshape the predicted answer there.
    TableSchema s = make_schema(1, {cat_column(0, "a", 2), cat_column(1, "b", 2)});
    AnswerSet a(s);
    a.add({1, 0, 0, 0.0});
    a.add({0, 0, 1, 1.0});
    a.add({1, 0, 1, 0.0});
    ModelParams p = ModelParams::ones(2, 1, 2);
    p.phi[0] = phi_for_quality(0.5, 0.8);
    p.phi[1] = phi_for_quality(0.5, 0.95);
    InferenceState st = make_state(s, std::move(a), std::move(p));
    // Column 1 consensus goes with the stronger worker, so worker 0 erred.
    REQUIRE(st.truths[1].argmax_label() == 0);
    REQUIRE(st.truths[0].probs()[0] > 0.9);

    CorrelationModel m = empty_model(2);
    m.weights[0 * 2 + 1] = 0.9;
    m.conditionals[0 * 2 + 1].present = true;
    m.conditionals[0 * 2 + 1].p_given[1] = 0.95;
    m.conditionals[0 * 2 + 1].p_given[0] = 0.05;

    const AssignmentConfig cfg{};
    const double sa = structure_aware_gain(st, m, 0, 0, 0, cfg);
    const double inh = inherent_gain(st, 0, 0, 0, cfg);
    CHECK(std::abs(sa - inh) > 1e-4);
}

TEST_CASE("entropy policy picks the most uncertain cells first") {
    TableSchema s = make_schema(1, {cat_column(0, "a", 4), cat_column(1, "b", 2)});
    InferenceState st = make_state(s, AnswerSet(s), ModelParams::ones(1, 1, 2));
    st.truths[0] = TruthDistribution::categorical({0.25, 0.25, 0.25, 0.25});
    st.truths[1] = TruthDistribution::categorical({0.9, 0.1});

    AssignmentConfig cfg;
    cfg.policy = Policy::Entropy;
    TaskSelector sel(cfg);
    const auto one = sel.select(st, nullptr, 0);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == CellRef{0, 0});

    cfg.batch_k = 2;
    TaskSelector sel2(cfg);
    const auto two = sel2.select(st, nullptr, 0);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == CellRef{0, 0});
    CHECK(two[1] == CellRef{0, 1});
}

TEST_CASE("looping policy cycles the table globally") {
    TableSchema s = make_schema(2, {cat_column(0, "a", 2), cat_column(1, "b", 2)});
    InferenceState st = make_state(s, AnswerSet(s), ModelParams::ones(4, 2, 2));
    AssignmentConfig cfg;
    cfg.policy = Policy::Looping;
    TaskSelector sel(cfg);
    auto first = [&](WorkerId u) {
        const auto v = sel.select(st, nullptr, u);
        REQUIRE(v.size() == 1);
        return v[0];
    };
    CHECK(first(0) == CellRef{0, 0});
    CHECK(first(1) == CellRef{0, 1});
    CHECK(first(0) == CellRef{1, 0});
    CHECK(first(2) == CellRef{1, 1});
    CHECK(first(3) == CellRef{0, 0});  // wrapped around

    // The cursor skips cells this worker already answered.
    AnswerSet a(s);
    a.add({3, 0, 0, 0.0});
    InferenceState st2 = make_state(s, std::move(a), ModelParams::ones(4, 2, 2));
    TaskSelector fresh(cfg);
    const auto v = fresh.select(st2, nullptr, 3);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == CellRef{0, 1});
}

TEST_CASE("selection skips answered cells and reports exhaustion") {
    TableSchema s = make_schema(1, {cat_column(0, "a", 2), cat_column(1, "b", 2)});
    AnswerSet a(s);
    a.add({0, 0, 0, 0.0});
    a.add({0, 0, 1, 1.0});
    a.add({1, 0, 0, 0.0});
    InferenceState st = make_state(s, std::move(a), ModelParams::ones(2, 1, 2));

    for (Policy pol : {Policy::Random, Policy::Looping, Policy::Entropy, Policy::InherentIG,
                       Policy::StructureAwareIG}) {
        AssignmentConfig cfg;
        cfg.policy = pol;
        cfg.batch_k = 3;
        TaskSelector sel(cfg);
        CHECK(sel.select(st, nullptr, 0).empty());  // worker 0 exhausted the table
        const auto picks = sel.select(st, nullptr, 1);
        REQUIRE(picks.size() == 1);
        CHECK(picks[0] == CellRef{0, 1});
    }
}

TEST_CASE("random policy is reproducible from its seed") {
    TableSchema s =
        make_schema(4, {cat_column(0, "a", 2), cat_column(1, "b", 2), cat_column(2, "c", 3)});
    InferenceState st = make_state(s, AnswerSet(s), ModelParams::ones(3, 4, 3));
    AssignmentConfig cfg;
    cfg.policy = Policy::Random;
    cfg.batch_k = 2;
    cfg.seed = 42;
    TaskSelector s1(cfg), s2(cfg);
    for (WorkerId u : {0u, 1u, 2u, 0u, 1u}) {
        const auto a1 = s1.select(st, nullptr, u);
        const auto a2 = s2.select(st, nullptr, u);
        REQUIRE(a1.size() == 2);
        CHECK(a1 == a2);
    }
}

TEST_CASE("greedy batches dominate random batches of equal size") {
    TableSchema s =
        make_schema(2, {cat_column(0, "a", 2), cat_column(1, "b", 3), cont_column(2, "x", -9, 9)});
    AnswerSet a(s);
    a.add({0, 0, 0, 1.0});
    a.add({1, 0, 0, 1.0});
    a.add({0, 0, 1, 2.0});
    a.add({0, 1, 2, 0.4});
    ModelParams p = ModelParams::ones(3, 2, 3);
    p.phi = {phi_for_quality(0.5, 0.8), phi_for_quality(0.5, 0.7), phi_for_quality(0.5, 0.9)};
    InferenceState st = make_state(s, std::move(a), std::move(p));

    AssignmentConfig cfg;
    cfg.policy = Policy::InherentIG;
    cfg.batch_k = 3;
    TaskSelector sel(cfg);
    const std::vector<CellRef> greedy = sel.select(st, nullptr, 2);
    REQUIRE(greedy.size() == 3);
    const double g_greedy = batch_gain(st, nullptr, greedy, 2, cfg);

    std::vector<CellRef> all;
    for (std::uint32_t i = 0; i < 2; ++i)
        for (std::uint32_t j = 0; j < 3; ++j) all.push_back({i, j});
    std::mt19937_64 rng(5);
    int dominated = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        std::vector<CellRef> sub;
        std::sample(all.begin(), all.end(), std::back_inserter(sub), 3, rng);
        if (g_greedy >= batch_gain(st, nullptr, sub, 2, cfg) - 1e-9) ++dominated;
    }
    CHECK(dominated >= trials * 95 / 100);
}

TEST_CASE("batch gain is the sum of the individual gains") {
    TableSchema s = make_schema(2, {cat_column(0, "a", 2), cont_column(1, "x", -9, 9)});
    AnswerSet a(s);
    a.add({0, 0, 0, 1.0});
    a.add({0, 1, 1, 0.3});
    InferenceState st = make_state(s, std::move(a), ModelParams::ones(2, 2, 2));
    const AssignmentConfig cfg{};
    const std::vector<CellRef> cells = {{0, 1}, {1, 0}};

    const double summed = inherent_gain(st, 0, 1, 1, cfg) + inherent_gain(st, 1, 0, 1, cfg);
    CHECK(batch_gain(st, nullptr, cells, 1, cfg) == doctest::Approx(summed).epsilon(1e-12));

    const CorrelationModel none = fit_correlations(s, st.answers, point_estimates_internal(st));
    const double sa_summed = structure_aware_gain(st, none, 0, 1, 1, cfg) +
                             structure_aware_gain(st, none, 1, 0, 1, cfg);
    CHECK(batch_gain(st, &none, cells, 1, cfg) == doctest::Approx(sa_summed).epsilon(1e-12));
}

TEST_CASE("differential entropy differences track a fine discretization") {
    const double delta = 1e-3;
    const double pairs[][2] = {{1.0, 0.25}, {0.5, 0.1}, {2.0, 0.8}};
    for (const auto& pr : pairs) {
        const double d_disc =
            discretized_normal_entropy(pr[0], delta) - discretized_normal_entropy(pr[1], delta);
        const double d_diff = normal_entropy(pr[0]) - normal_entropy(pr[1]);
        CHECK(std::abs(d_disc - d_diff) <= 0.01 * std::abs(d_diff));
    }
}

TEST_CASE("assignment config rejects degenerate settings") {
    AssignmentConfig cfg;
    cfg.s_cont = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.s_cont = 10;
    cfg.batch_k = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(TaskSelector{cfg}, std::invalid_argument);
}
