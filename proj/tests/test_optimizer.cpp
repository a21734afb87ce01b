#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nbof/optimizer.hpp"

using namespace nbof;

namespace {

NamedParam leaf(const char* name, const Shape& shape, std::vector<double> values) {
    Tensor t = Tensor::from_data(shape, std::move(values));
    t.set_requires_grad(true);
    return {name, t};
}

void set_grad(NamedParam& p, const std::vector<double>& g) {
    // route a fixed gradient through a real backward sweep
    Tensor weights = Tensor::from_data(p.tensor.shape(), g);
    sum_all(mul(p.tensor, weights)).backward();
}

}  // namespace

TEST_CASE("adam leaves parameters alone on zero gradient") {
    std::vector<NamedParam> params = {leaf("w", {3}, {1.0, -2.0, 0.5})};
    set_grad(params[0], {0.0, 0.0, 0.0});
    Adam adam;
    adam.step(params, 0.001);
    CHECK(params[0].tensor.data() == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("adam first step moves by about -lr") {
    std::vector<NamedParam> params = {leaf("w", {1}, {0.0})};
    set_grad(params[0], {1.0});
    Adam adam;
    adam.step(params, 0.001);
    // bias-corrected ratio is 1 at step 1, so the move is lr / (1 + eps)
    CHECK(params[0].tensor.data()[0] == doctest::Approx(-0.001).epsilon(1e-9));
    CHECK(adam.step_count() == 1);
}

TEST_CASE("adam aborts on non-finite gradients without touching parameters") {
    std::vector<NamedParam> params = {leaf("good", {2}, {1.0, 2.0}), leaf("bad", {1}, {3.0})};
    set_grad(params[0], {1.0, 1.0});
    // forge a NaN gradient on the second parameter
    set_grad(params[1], {1.0});
    params[1].tensor.impl()->grad[0] = std::nan("");
    Adam adam;
    CHECK_THROWS_WITH_AS(adam.step(params, 0.001), doctest::Contains("bad"), NumericError);
    CHECK(params[0].tensor.data() == std::vector<double>{1.0, 2.0});
    CHECK(params[1].tensor.data() == std::vector<double>{3.0});
    CHECK(adam.step_count() == 0);
}

TEST_CASE("max norm rescales only oversized rows") {
    Tensor w = Tensor::from_data({3, 2}, {8.0, 0.0,    // norm 8 -> scaled to 4
                                          0.6, 0.8,    // norm 1 -> untouched
                                          0.0, 0.0});  // zero row -> untouched
    apply_max_norm(w, 4.0);
    CHECK(w.at(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(w.at(1, 0) == 0.6);
    CHECK(w.at(1, 1) == 0.8);
    CHECK(w.at(2, 0) == 0.0);
    CHECK_THROWS_AS(apply_max_norm(w, 0.0), ConfigError);
}

TEST_CASE("post-step row norms respect the constraint") {
    Rng rng(3);
    Tensor w = Tensor::uniform({6, 4}, -3.0, 3.0, rng);
    w.set_requires_grad(true);
    std::vector<NamedParam> params = {{"w", w}};
    Adam adam;
    for (int step = 0; step < 50; ++step) {
        Tensor target = Tensor::uniform({6, 4}, -9.0, 9.0, rng);
        Tensor diff = sub(w, target);
        mean_all(mul(diff, diff)).backward();
        adam.step(params, 0.05);
        adam.zero_grads(params);
        apply_max_norm(w, 4.0);
        for (int i = 0; i < 6; ++i) {
            double sq = 0.0;
            for (int j = 0; j < 4; ++j) sq += w.at(i, j) * w.at(i, j);
            CHECK(std::sqrt(sq) <= 4.0 + 1e-12);
        }
    }
}

TEST_CASE("learning-rate schedule values") {
    LrSchedule financial = parse_milestones(0.001, "11:0.1,51:0.1");
    CHECK(lr_schedule_value(1, financial) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(lr_schedule_value(5, financial) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(lr_schedule_value(11, financial) == doctest::Approx(0.0001).epsilon(1e-12));
    CHECK(lr_schedule_value(51, financial) == doctest::Approx(0.00001).epsilon(1e-12));
    CHECK(lr_schedule_value(80, financial) == doctest::Approx(0.00001).epsilon(1e-12));

    LrSchedule medical = parse_milestones(0.001, "11:0.1,71:0.1");
    CHECK(lr_schedule_value(71, medical) == doctest::Approx(0.00001).epsilon(1e-12));
    CHECK(lr_schedule_value(90, medical) == doctest::Approx(0.00001).epsilon(1e-12));

    LrSchedule constant = parse_milestones(0.01, "");
    CHECK(lr_schedule_value(1000, constant) == 0.01);

    CHECK_THROWS_AS(parse_milestones(0.001, "51:0.1,11:0.1"), ConfigError);
    CHECK_THROWS_AS(parse_milestones(0.001, "11:0.1,11:0.1"), ConfigError);
    CHECK_THROWS_AS(parse_milestones(0.001, "banana"), ConfigError);
}

TEST_CASE("schedule is non-increasing for shrinking factors") {
    LrSchedule s = parse_milestones(0.5, "3:0.5,9:0.2,20:0.1");
    double last = lr_schedule_value(1, s);
    for (int epoch = 2; epoch <= 40; ++epoch) {
        double lr = lr_schedule_value(epoch, s);
        CHECK(lr <= last);
        last = lr;
    }
}

TEST_CASE("class weights from counts") {
    auto w = class_weights_from_counts({10, 40});
    CHECK(w[0] == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.4).epsilon(1e-12));

    CHECK(class_weights_from_counts({7, 7, 7}) == std::vector<double>{1, 1, 1});
    CHECK(class_weights_from_counts({1, 1, 1}) == std::vector<double>{1, 1, 1});
    CHECK_THROWS_AS(class_weights_from_counts({5, 0}), ConfigError);
    CHECK_THROWS_AS(class_weights_from_counts({}), ConfigError);
}

TEST_CASE("class weights have mean 1 and invert the count order") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int64_t> counts;
        for (int c = 0; c < 5; ++c) counts.push_back(1 + rng.below(500));
        auto w = class_weights_from_counts(counts);
        double mean = 0.0;
        for (double v : w) mean += v;
        mean /= static_cast<double>(w.size());
        CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
        for (size_t a = 0; a < counts.size(); ++a)
            for (size_t b = 0; b < counts.size(); ++b)
                if (counts[a] < counts[b]) CHECK(w[a] >= w[b]);
    }
}

TEST_CASE("regularizer parsing") {
    CHECK(regularizer_from_string("maxnorm") == Regularizer::MaxNorm);
    CHECK(regularizer_from_string("decay") == Regularizer::WeightDecay);
    CHECK(regularizer_from_string("none") == Regularizer::None);
    CHECK_THROWS_AS(regularizer_from_string("ridge"), ConfigError);
}

TEST_CASE("weight decay pulls parameters toward zero") {
    Adam::Config cfg;
    cfg.weight_decay = 0.1;
    Adam adam(cfg);
    std::vector<NamedParam> params = {leaf("w", {1}, {2.0})};
    set_grad(params[0], {0.0});
    adam.step(params, 0.01);
    CHECK(params[0].tensor.data()[0] < 2.0);
}
