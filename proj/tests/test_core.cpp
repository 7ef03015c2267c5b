#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "crowdtab/answers.hpp"
#include "crowdtab/params.hpp"
#include "crowdtab/schema.hpp"
#include "crowdtab/standardize.hpp"
#include "crowdtab/truth.hpp"
#include "crowdtab/worker_model.hpp"
#include "test_util.hpp"

using namespace crowdtab;
using namespace crowdtab::testutil;

TEST_CASE("schema validation accepts a well-formed mixed table") {
    TableSchema s = make_schema(3, {cat_column(0, "kind", 3), cont_column(1, "price", 0, 100)});
    CHECK(s.column_count() == 2);
    CHECK(s.cell_count() == 6);
    CHECK(s.cell_index(2, 1) == 5);  // row-major
    CHECK(s.column(0).is_categorical());
    CHECK_FALSE(s.column(1).is_categorical());
    CHECK_THROWS_AS((void)s.column(2), std::out_of_range);
}

TEST_CASE("schema validation rejects malformed tables") {
    TableSchema s;
    s.row_count = 1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);  // no columns

    s.columns = {cat_column(0, "a", 2)};
    s.row_count = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);  // no rows
    s.row_count = 1;

    SUBCASE("duplicate names") {
        s.columns = {cat_column(0, "a", 2), cat_column(1, "a", 2)};
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
    SUBCASE("too few labels") {
        s.columns = {cat_column(0, "a", 1)};
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
    SUBCASE("duplicate labels") {
        s.columns = {cat_column(0, "a", 2)};
        s.columns[0].labels[1] = s.columns[0].labels[0];
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
    SUBCASE("degenerate continuous domain") {
        s.columns = {cont_column(0, "a", 5, 5)};
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
    SUBCASE("column index out of step") {
        s.columns = {cat_column(1, "a", 2)};
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
    SUBCASE("comma in a name breaks the CSV container") {
        s.columns = {cat_column(0, "a,b", 2)};
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
    SUBCASE("comma in a label breaks the CSV container") {
        s.columns = {cat_column(0, "a", 2)};
        s.columns[0].labels[0] = "x,y";
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
}

TEST_CASE("answer set indexes by cell and by worker") {
    TableSchema s = make_schema(2, {cat_column(0, "c", 2), cont_column(1, "x")});
    AnswerSet a(s);
    CHECK(a.empty());

    a.add({0, 0, 0, 1.0});
    a.add({1, 0, 0, 0.0});
    a.add({0, 1, 1, 3.5});

    CHECK(a.size() == 3);
    CHECK(a.worker_count() == 2);
    CHECK(a.cell_answers(0, 0).size() == 2);
    CHECK(a.cell_answers(1, 1).size() == 1);
    CHECK(a.cell_answers(1, 0).empty());
    CHECK(a.worker_answers(0).size() == 2);
    CHECK(a.worker_answers(1).size() == 1);
    CHECK(a.worker_answers(99).empty());
    CHECK(a.has_answered(0, 0, 0));
    CHECK_FALSE(a.has_answered(1, 1, 1));
    CHECK(a.at(2).value == 3.5);
    CHECK(a.at(0).label() == 1);
}

TEST_CASE("answer set rejects invalid answers") {
    TableSchema s = make_schema(2, {cat_column(0, "c", 2), cont_column(1, "x")});
    AnswerSet a(s);
    a.add({0, 0, 0, 1.0});

    CHECK_THROWS_AS(a.add({0, 0, 0, 0.0}), std::invalid_argument);  // duplicate (worker, cell)
    CHECK_THROWS_AS(a.add({1, 2, 0, 0.0}), std::invalid_argument);  // row out of range
    CHECK_THROWS_AS(a.add({1, 0, 2, 0.0}), std::invalid_argument);  // col out of range
    CHECK_THROWS_AS(a.add({1, 0, 0, 0.5}), std::invalid_argument);  // fractional label
    CHECK_THROWS_AS(a.add({1, 0, 0, 2.0}), std::invalid_argument);  // label index too large
    CHECK_THROWS_AS(a.add({1, 0, 0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(a.add({1, 1, 1, std::nan("")}), std::invalid_argument);
    CHECK(a.size() == 1);

    a.add({1, 0, 0, 1.0});  // same cell, different worker is fine
    CHECK(a.size() == 2);
}

TEST_CASE("truth distribution factories validate their inputs") {
    CHECK_THROWS_AS(TruthDistribution::categorical({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(TruthDistribution::categorical({1.2, -0.2}), std::invalid_argument);
    CHECK_THROWS_AS(TruthDistribution::normal(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(TruthDistribution::normal(0.0, -1.0), std::invalid_argument);

    auto t = TruthDistribution::categorical({0.1, 0.7, 0.2});
    CHECK(t.is_categorical());
    CHECK(t.argmax_label() == 1);
    CHECK(t.point_estimate() == 1.0);

    auto tie = TruthDistribution::categorical({0.5, 0.5});
    CHECK(tie.argmax_label() == 0);  // ties go to the lowest index

    auto n = TruthDistribution::normal(1.0, 0.5);
    CHECK_FALSE(n.is_categorical());
    CHECK(n.mean() == 1.0);
    CHECK(n.variance() == 0.5);
    CHECK(n.point_estimate() == 1.0);
}

TEST_CASE("model params validate and normalize") {
    ModelParams p = ModelParams::ones(2, 3, 2);
    CHECK(p.phi.size() == 2);
    CHECK(p.alpha.size() == 3);
    CHECK(p.beta.size() == 2);
    CHECK_NOTHROW(p.validate());

    p.alpha[1] = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.alpha[1] = -2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.alpha[1] = 1.0;

    // Rescaling difficulties must not move any answer variance.
    p.alpha = {2.0, 4.0, 6.0};
    p.beta = {0.5, 1.5};
    p.phi = {1.0, 3.0};
    const double before = p.alpha[1] * p.beta[0] * p.phi[1];
    p.normalize_difficulties();

    double mean_alpha = (p.alpha[0] + p.alpha[1] + p.alpha[2]) / 3.0;
    double mean_beta = (p.beta[0] + p.beta[1]) / 2.0;
    CHECK(mean_alpha == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean_beta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.alpha[1] * p.beta[0] * p.phi[1] == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("worker quality follows the erf window") {
    // eps = 0.5 and variance 0.03125 put the window at exactly 2 standard
    // deviations: q = erf(2).
    CHECK(quality_from_variance(0.5, 0.03125) == doctest::Approx(0.9953222650189527).epsilon(1e-12));
    // Unit variance: q = erf(0.5 / sqrt(2)) = 2 Phi(0.5) - 1.
    CHECK(quality_from_variance(0.5, 1.0) == doctest::Approx(0.3829249225480261).epsilon(1e-12));

    ModelParams p = ModelParams::ones(1, 1, 1);
    p.alpha[0] = 2.0;
    p.beta[0] = 0.25;
    p.phi[0] = 0.0625;
    CHECK(cell_variance(p, 0, 0, 0) == doctest::Approx(0.03125).epsilon(1e-12));
    CHECK(worker_quality(p, 0, 0, 0) == doctest::Approx(std::erf(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(cell_variance(p, 1, 0, 0), std::out_of_range);

    CHECK(clamp_quality(0.0) == 1e-12);
    CHECK(clamp_quality(1.0) == 1.0 - 1e-12);
    CHECK(clamp_quality(0.5) == 0.5);
}

TEST_CASE("categorical answer probabilities split the miss mass evenly") {
    CHECK(categorical_answer_prob(0.8, 3, true) == doctest::Approx(0.8));
    CHECK(categorical_answer_prob(0.8, 3, false) == doctest::Approx(0.1));
    // q = 1/|L| makes the answer carry no information.
    CHECK(categorical_answer_prob(0.25, 4, true) == doctest::Approx(0.25));
    CHECK(categorical_answer_prob(0.25, 4, false) == doctest::Approx(0.25));
}

TEST_CASE("answer log likelihood matches the closed forms") {
    TableSchema s = make_schema(1, {cat_column(0, "c", 3), cont_column(1, "x")});
    ModelParams p = ModelParams::ones(1, 1, 2);

    // Continuous answer exactly at the truth with unit variance:
    // log(1/sqrt(2 pi)).
    Answer cont{0, 0, 1, 0.0};
    CHECK(answer_log_likelihood(s, cont, 0.0, p) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));

    const double q = worker_quality(p, 0, 0, 0);
    Answer cat{0, 0, 0, 1.0};
    CHECK(answer_log_likelihood(s, cat, 1.0, p) == doctest::Approx(std::log(q)));
    CHECK(answer_log_likelihood(s, cat, 2.0, p) == doctest::Approx(std::log((1.0 - q) / 2.0)));
    CHECK_THROWS_AS(answer_log_likelihood(s, cat, 0.5, p), std::invalid_argument);
}

TEST_CASE("standardizer uses population moments of the collected answers") {
    TableSchema s = make_schema(3, {cat_column(0, "c", 2), cont_column(1, "x")});
    AnswerSet a(s);
    a.add({0, 0, 1, 1.0});
    a.add({0, 1, 1, 2.0});
    a.add({0, 2, 1, 3.0});
    a.add({0, 0, 0, 1.0});

    Standardizer z = Standardizer::fit(s, a);
    CHECK(z.offset(1) == doctest::Approx(2.0));
    CHECK(z.scale(1) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(z.to_internal(1, 3.0) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
    CHECK(z.from_internal(1, z.to_internal(1, 7.25)) == doctest::Approx(7.25).epsilon(1e-12));

    // Categorical columns pass through untouched.
    CHECK(z.offset(0) == 0.0);
    CHECK(z.scale(0) == 1.0);
    Answer mapped = z.to_internal(Answer{0, 0, 0, 1.0});
    CHECK(mapped.value == 1.0);
}

TEST_CASE("standardizer handles zero-spread and empty columns") {
    TableSchema s = make_schema(2, {cont_column(0, "x"), cont_column(1, "y")});
    AnswerSet a(s);
    a.add({0, 0, 0, 4.0});
    a.add({1, 0, 0, 4.0});  // no spread

    Standardizer z = Standardizer::fit(s, a);
    CHECK(z.offset(0) == doctest::Approx(4.0));
    CHECK(z.scale(0) == 1.0);  // mean-centering only
    CHECK(z.to_internal(0, 4.0) == doctest::Approx(0.0));

    // Column with no answers stays at identity.
    CHECK(z.offset(1) == 0.0);
    CHECK(z.scale(1) == 1.0);

    Standardizer id = Standardizer::identity(s);
    CHECK(id.to_internal(0, 3.25) == 3.25);
}
