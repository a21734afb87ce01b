#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nbof/model.hpp"

using namespace nbof;

namespace {

ModelConfig base_config(const std::string& layers, int d, int n, int classes) {
    ModelConfig mc;
    mc.layers = parse_layer_string(layers);
    mc.codewords = 8;
    mc.input_dim = d;
    mc.input_len = n;
    mc.classes = classes;
    mc.init_seed = 5;
    return mc;
}

}  // namespace

TEST_CASE("layer string round trip") {
    const std::string text = "conv(64,5,1),bn,relu,nbof,dense(512,relu),dropout(0.2),output";
    CHECK(layer_string(parse_layer_string(text)) == text);
    CHECK_THROWS_AS(parse_layer_string("dense"), ConfigError);
    CHECK_THROWS_AS(parse_layer_string("conv(64)"), ConfigError);
    CHECK_THROWS_AS(parse_layer_string("warp(3)"), ConfigError);
    CHECK_THROWS_AS(parse_layer_string(""), ConfigError);
}

TEST_CASE("placement parsing") {
    Placement p = placement_from_string("ca,ia");
    CHECK(p.ca);
    CHECK(p.ia);
    CHECK_FALSE(p.ta);
    CHECK(placement_string(p) == "ca,ia");
    CHECK_THROWS_AS(placement_from_string("ca,ca"), ConfigError);
    CHECK_THROWS_AS(placement_from_string("xa"), ConfigError);
    CHECK_FALSE(placement_from_string("none").ca);
}

TEST_CASE("shape trace of the plain pipeline") {
    ModelConfig mc = base_config("nbof,dense(512),output", 40, 15, 3);
    mc.codewords = 256;
    Model model = build_model(mc);
    // 40x15 input -> 256-histogram -> 512 dense -> 3 logits
    CHECK(model.trace.front().stage == "input");
    CHECK(model.trace.front().rows == 40);
    CHECK(model.trace.front().cols == 15);
    bool saw_hist = false, saw_dense = false;
    for (const auto& t : model.trace) {
        if (t.stage == "histogram") {
            CHECK(t.rows == 256);
            saw_hist = true;
        }
        if (t.stage == "dense") {
            CHECK(t.rows == 512);
            saw_dense = true;
        }
    }
    CHECK(saw_hist);
    CHECK(saw_dense);
    CHECK(model.trace.back().rows == 3);

    // runtime shapes match the trace
    Rng rng(1);
    ForwardOptions opt;
    Tensor logits = model.forward_one(Tensor::uniform({40, 15}, -1.0, 1.0, rng), opt);
    CHECK(logits.shape() == Shape{3});
}

TEST_CASE("temporal attention requires fixed-length input") {
    ModelConfig mc = base_config("nbof,dense(8),output", 6, 0, 2);  // variable length
    mc.placement = placement_from_string("ta");
    CHECK_THROWS_AS(build_model(mc), ConfigError);

    ModelConfig fixed = base_config("nbof,dense(8),output", 6, 15, 2);
    fixed.placement = placement_from_string("ta");
    Model model = build_model(fixed);
    Rng rng(2);
    ForwardOptions opt;
    CHECK_THROWS_AS(model.forward_one(Tensor::uniform({6, 20}, -1.0, 1.0, rng), opt), ShapeError);
}

TEST_CASE("two-conv financial backbone is accepted") {
    ModelConfig mc = base_config("conv(64,5),bn,relu,conv(64,5),bn,relu,nbof,dense(32),output",
                                 40, 15, 3);
    Model model = build_model(mc);
    Rng rng(3);
    ForwardOptions opt;
    std::vector<Tensor> logits = model.forward(
        {Tensor::uniform({40, 15}, -1.0, 1.0, rng), Tensor::uniform({40, 15}, -1.0, 1.0, rng)},
        opt);
    CHECK(logits.size() == 2);
    CHECK(logits[0].shape() == Shape{3});
}

TEST_CASE("audio backbone with pooling is accepted") {
    // 32,32 filters, halve time, then 64,64 before quantization
    ModelConfig mc = base_config(
        "conv(32,5),bn,relu,conv(32,5),bn,relu,maxpool,conv(64,5),bn,relu,conv(64,5),bn,relu,"
        "nbof,dense(32),dropout(0.2),output",
        128, 64, 8);
    Model model = build_model(mc);
    for (const auto& t : model.trace) {
        if (t.stage == "maxpool") CHECK(t.cols == 32);
    }
    Rng rng(6);
    ForwardOptions opt;
    CHECK(model.forward_one(Tensor::uniform({128, 64}, -1.0, 1.0, rng), opt).shape() == Shape{8});
}

TEST_CASE("strided conv backbone is accepted") {
    // strides 1,1,2,1,2 shrink 40 steps to 10
    ModelConfig mc = base_config(
        "conv(32,3),bn,relu,conv(32,3),bn,relu,conv(64,3,2),bn,relu,conv(64,3),bn,relu,"
        "conv(128,3,2),bn,relu,nbof,dense(32),output",
        24, 40, 2);
    Model model = build_model(mc);
    int last_cols = 0;
    for (const auto& t : model.trace) {
        if (t.stage == "conv") last_cols = t.cols;
    }
    CHECK(last_cols == 10);
    Rng rng(7);
    ForwardOptions opt;
    CHECK(model.forward_one(Tensor::uniform({24, 40}, -1.0, 1.0, rng), opt).shape() == Shape{2});
}

TEST_CASE("build errors name the offending stage") {
    // dense before the quantization stage
    CHECK_THROWS_WITH_AS(build_model(base_config("dense(8),nbof,output", 4, 10, 2)),
                         doctest::Contains("layer 0"), ConfigError);
    // no quantization stage
    CHECK_THROWS_AS(build_model(base_config("dense(8),output", 4, 10, 2)), ConfigError);
    // no output layer
    CHECK_THROWS_AS(build_model(base_config("nbof,dense(8)", 4, 10, 2)), ConfigError);
    // two quantization stages
    CHECK_THROWS_AS(build_model(base_config("nbof,tnbof,output", 4, 10, 2)), ConfigError);
    // output class count clash
    CHECK_THROWS_AS(build_model(base_config("nbof,output(5)", 4, 10, 2)), ConfigError);
    // maxpool on a too-short sequence
    CHECK_THROWS_AS(build_model(base_config("maxpool,nbof,output", 4, 1, 2)), ConfigError);
}

TEST_CASE("tnbof model with every placement") {
    ModelConfig mc = base_config("tnbof,dense(8),output", 5, 12, 2);
    mc.placement = placement_from_string("ca,ta,ia");
    mc.tnbof_split = 0.5;
    Model model = build_model(mc);

    auto params = model.parameters();
    bool has_short = false, has_ta_short = false;
    for (const auto& p : params) {
        if (p.name.find(".short.") != std::string::npos) has_short = true;
        if (p.name.find("ta_short") != std::string::npos) has_ta_short = true;
    }
    CHECK(has_short);
    CHECK(has_ta_short);

    Rng rng(4);
    ForwardOptions opt;
    Tensor logits = model.forward_one(Tensor::uniform({5, 12}, -1.0, 1.0, rng), opt);
    CHECK(logits.shape() == Shape{2});

    // histogram stage doubles the codewords
    bool found = false;
    for (const auto& t : model.trace) {
        if (t.stage == "histogram") {
            CHECK(t.rows == 16);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("eval forward is deterministic") {
    ModelConfig mc = base_config("conv(6,3),bn,relu,nbof,dense(8),dropout(0.2),output", 4, 10, 2);
    mc.placement = placement_from_string("ia");
    Model model = build_model(mc);
    Rng rng(9);
    Tensor x = Tensor::uniform({4, 10}, -1.0, 1.0, rng);
    NoGradGuard no_grad;
    ForwardOptions opt;  // eval: dropout off, bn running stats
    Tensor a = model.forward_one(x, opt);
    Tensor b = model.forward_one(x, opt);
    CHECK(a.data() == b.data());  // bitwise
}

TEST_CASE("attention placements add no random draws to shared layers") {
    ModelConfig plain = base_config("nbof,dense(8),output", 4, 10, 2);
    ModelConfig with_ia = base_config("nbof,dense(8),output", 4, 10, 2);
    with_ia.placement = placement_from_string("ia");
    Model a = build_model(plain);
    Model b = build_model(with_ia);
    auto pa = a.parameters();
    for (const auto& p : pa) {
        for (const auto& q : b.parameters()) {
            if (p.name == q.name) CHECK(p.tensor.data() == q.tensor.data());
        }
    }
}

TEST_CASE("spectrogram-scale shapes run through the audio backbone") {
    ModelConfig mc = base_config(
        "conv(32,5),bn,relu,conv(32,5),bn,relu,maxpool,conv(64,5),bn,relu,conv(64,5),bn,relu,"
        "nbof,dense(512),dropout(0.2),output",
        128, 640, 8);
    mc.codewords = 256;
    Model model = build_model(mc);
    Rng rng(41);
    NoGradGuard no_grad;
    ForwardOptions opt;
    Tensor logits = model.forward_one(Tensor::uniform({128, 640}, -1.0, 1.0, rng), opt);
    CHECK(logits.shape() == Shape{8});
    CHECK(logits.all_finite());
}

TEST_CASE("kmeans init plants codewords on the data") {
    ModelConfig mc = base_config("nbof,dense(8),output", 2, 20, 2);
    mc.codewords = 2;
    Model model = build_model(mc);
    // two tight clusters at (-5,-5) and (5,5)
    std::vector<Tensor> probes;
    Rng rng(31);
    for (int i = 0; i < 8; ++i) {
        std::vector<double> values(40);
        for (int t = 0; t < 20; ++t) {
            const double base = t % 2 == 0 ? -5.0 : 5.0;
            values[t] = base + 0.01 * rng.normal();
            values[20 + t] = base + 0.01 * rng.normal();
        }
        probes.push_back(Tensor::from_data({2, 20}, values));
    }
    Rng krng(7);
    model.kmeans_init(probes, 256, krng);
    const auto& v = model.layers[model.quantize_stage()].cb.codewords;
    const double c0 = v.at(0, 0);
    const double c1 = v.at(1, 0);
    CHECK(std::abs(std::abs(c0) - 5.0) < 0.1);
    CHECK(std::abs(std::abs(c1) - 5.0) < 0.1);
    CHECK(c0 * c1 < 0.0);  // one center per cluster
}
