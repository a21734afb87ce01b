#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nbof/metrics.hpp"

using namespace nbof;

TEST_CASE("macro f1 extremes") {
    CHECK(macro_f1(Confusion::from_rows({{5, 0}, {0, 5}})) == doctest::Approx(1.0));
    CHECK(macro_f1(Confusion::from_rows({{0, 5}, {5, 0}})) == doctest::Approx(0.0));
}

TEST_CASE("macro f1 hand-computed oracle") {
    // class 0: P = 4/6, R = 4/5 -> F1 = 0.7273; class 1: P = 3/4, R = 3/5
    // -> F1 = 0.6667; macro = 0.6970
    Confusion cm = Confusion::from_rows({{4, 1}, {2, 3}});
    CHECK(macro_f1(cm) == doctest::Approx(0.6970).epsilon(5e-4));
}

TEST_CASE("macro f1 degenerate class contributes zero") {
    // class 1 never predicted and never present: F1 treated as 0
    Confusion cm = Confusion::from_rows({{6, 0}, {0, 0}});
    CHECK(macro_f1(cm) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("confusion matrix contracts") {
    CHECK_THROWS_AS(Confusion::from_rows({{1, 2, 3}, {4, 5, 6}}), ContractError);
    CHECK_THROWS_AS(Confusion::from_rows({{1, -2}, {0, 3}}), ContractError);
    Confusion cm = Confusion::from_rows({{4, 1}, {2, 3}});
    CHECK(cm.total() == 10);
}

TEST_CASE("sensitivity specificity mean") {
    // sens 0.8 (8 of 10 positives), spec 0.6 (6 of 10 negatives)
    Confusion cm = Confusion::from_rows({{8, 2}, {4, 6}});
    CHECK(sens_spec_mean(cm) == doctest::Approx(0.7).epsilon(1e-12));

    CHECK(sens_spec_mean(Confusion::from_rows({{10, 0}, {0, 10}})) == doctest::Approx(1.0));

    // always-positive predictor on balanced data: sens 1, spec 0
    CHECK(sens_spec_mean(Confusion::from_rows({{10, 0}, {10, 0}})) == doctest::Approx(0.5));

    // undefined denominator contributes 0 and raises the flag
    bool undefined = false;
    const double v = sens_spec_mean(Confusion::from_rows({{0, 0}, {5, 5}}), &undefined);
    CHECK(undefined);
    CHECK(v == doctest::Approx(0.25).epsilon(1e-12));  // (0 + 0.5) / 2

    CHECK_THROWS_AS(sens_spec_mean(Confusion::from_rows({{1}})), ContractError);
}

TEST_CASE("accuracy and bundled metrics") {
    Confusion cm = Confusion::from_rows({{4, 1}, {2, 3}});
    CHECK(accuracy(cm) == doctest::Approx(0.7).epsilon(1e-12));
    Metrics m = metrics_from_confusion(cm);
    CHECK(m.accuracy == doctest::Approx(0.7));
    CHECK(m.has_sens_spec);

    // metrics are pure functions of the stored matrix
    Metrics again = metrics_from_confusion(m.confusion);
    CHECK(again.accuracy == m.accuracy);
    CHECK(again.macro_f1 == m.macro_f1);
    CHECK(again.sens_spec == m.sens_spec);

    CHECK_THROWS_AS(accuracy(Confusion(2)), ContractError);  // empty matrix
}

TEST_CASE("three-class metrics skip sens-spec") {
    Confusion cm = Confusion::from_rows({{3, 0, 1}, {0, 4, 0}, {1, 0, 2}});
    Metrics m = metrics_from_confusion(cm);
    CHECK_FALSE(m.has_sens_spec);
    CHECK(m.accuracy == doctest::Approx(9.0 / 11.0));
}
