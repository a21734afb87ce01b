#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nbof/train.hpp"

using namespace nbof;

namespace {

TrainConfig small_config(const std::string& out_dir) {
    TrainConfig cfg;
    cfg.layers_text = "nbof,dense(8),output";
    cfg.codewords = 4;
    cfg.epochs = 100;
    cfg.batch = 8;
    cfg.lr = 0.01;
    cfg.seed = 3;
    cfg.folds = 1;
    cfg.out_dir = out_dir;
    return cfg;
}

}  // namespace

TEST_CASE("overfits a 16-sample separable set") {
    // n=20 keeps the mixture-weight signal per-sample separable
    Dataset ds = synth_clusters(4, 20, 2, 8, 5);
    TrainConfig cfg = small_config("tt_overfit");
    cfg.codewords = 8;
    cfg.layers_text = "nbof,dense(16),output";
    TrainResult result = train(cfg, ds);
    REQUIRE(result.history.size() == 100);
    CHECK(result.history.back().train_acc == doctest::Approx(1.0));

    // eval-mode accuracy on the training set matches
    Metrics m = evaluate(result.model, ds);
    CHECK(m.accuracy == doctest::Approx(1.0));
    CHECK(m.confusion.total() == 16);
}

TEST_CASE("identical config and seed reproduce the loss history") {
    Dataset ds = synth_clusters(4, 6, 2, 10, 8);
    TrainConfig cfg = small_config("tt_det_a");
    cfg.epochs = 6;
    TrainResult a = train(cfg, ds);
    cfg.out_dir = "tt_det_b";
    TrainResult b = train(cfg, ds);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);  // bitwise
        CHECK(a.history[i].val_acc == b.history[i].val_acc);
    }
}

TEST_CASE("zero-epoch run checkpoints the initial parameters") {
    Dataset ds = synth_clusters(4, 6, 2, 6, 9);
    TrainConfig cfg = small_config("tt_zero");
    cfg.epochs = 0;
    TrainResult result = train(cfg, ds);
    CHECK(result.history.empty());
    CHECK(result.checkpoint.epoch == 0);

    // parameters equal a freshly built model with the same seed
    Model fresh = model_from_checkpoint(result.checkpoint);
    auto params = fresh.parameters();
    for (const auto& [name, sv] : result.checkpoint.params) {
        for (auto& p : params) {
            if (p.name == name) CHECK(p.tensor.data() == sv.second);
        }
    }

    // history file exists with a header and no data rows
    std::ifstream hist("tt_zero/history.csv");
    REQUIRE(hist.good());
    int data_rows = 0;
    std::string line;
    while (std::getline(hist, line)) {
        if (!line.empty() && line[0] != '#' && line.rfind("epoch", 0) != 0) data_rows++;
    }
    CHECK(data_rows == 0);
}

TEST_CASE("resume matches uninterrupted training") {
    Dataset ds = synth_clusters(4, 6, 2, 12, 11);
    TrainConfig full = small_config("tt_full");
    full.epochs = 6;
    full.folds = 3;
    TrainResult uninterrupted = train(full, ds);

    TrainConfig half = full;
    half.epochs = 3;
    half.out_dir = "tt_half";
    TrainResult first = train(half, ds);

    TrainConfig rest = full;
    rest.out_dir = "tt_rest";
    TrainResult resumed = train(rest, ds, &first.checkpoint);
    REQUIRE(resumed.history.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        const HistoryRow& a = uninterrupted.history[3 + i];
        const HistoryRow& b = resumed.history[i];
        CHECK(a.epoch == b.epoch);
        CHECK(std::abs(a.train_loss - b.train_loss) <= 1e-12);
        CHECK(a.val_acc == b.val_acc);
    }

    // resuming under a different config is rejected
    TrainConfig other = full;
    other.lr = 0.123;
    CHECK_THROWS_AS(train(other, ds, &first.checkpoint), ConfigError);
}

TEST_CASE("checkpoint file round trip is exact") {
    Dataset ds = synth_clusters(3, 5, 2, 8, 13);
    TrainConfig cfg = small_config("tt_ckpt");
    cfg.epochs = 4;
    TrainResult result = train(cfg, ds);

    Checkpoint back = load_checkpoint("tt_ckpt/model.ckpt");
    CHECK(back.epoch == 4);
    CHECK(back.config_hash == result.checkpoint.config_hash);
    CHECK(back.train_rng_state == result.checkpoint.train_rng_state);
    CHECK(back.adam_t == result.checkpoint.adam_t);
    REQUIRE(back.params.size() == result.checkpoint.params.size());
    for (size_t i = 0; i < back.params.size(); ++i) {
        CHECK(back.params[i].first == result.checkpoint.params[i].first);
        CHECK(back.params[i].second.second == result.checkpoint.params[i].second.second);
    }

    Model model = model_from_checkpoint(back);
    Metrics a = evaluate(model, ds);
    Metrics b = evaluate(result.model, ds);
    CHECK(a.accuracy == b.accuracy);
}

TEST_CASE("history rows count epochs in order") {
    Dataset ds = synth_clusters(3, 5, 2, 8, 17);
    TrainConfig cfg = small_config("tt_hist");
    cfg.epochs = 7;
    TrainResult result = train(cfg, ds);
    REQUIRE(result.history.size() == 7);
    for (int i = 0; i < 7; ++i) CHECK(result.history[i].epoch == i + 1);

    std::ifstream hist("tt_hist/history.csv");
    std::string first_line;
    std::getline(hist, first_line);
    CHECK(first_line.find("batch=8") != std::string::npos);  // recorded per design
    int data_rows = 0;
    std::string line;
    while (std::getline(hist, line)) {
        if (!line.empty() && line[0] != '#' && line.rfind("epoch", 0) != 0) data_rows++;
    }
    CHECK(data_rows == 7);
}

TEST_CASE("tau columns appear for attention models") {
    Dataset ds = synth_clusters(4, 6, 2, 8, 19);
    TrainConfig cfg = small_config("tt_tau");
    cfg.epochs = 2;
    cfg.placement_text = "ia,ca";
    TrainResult result = train(cfg, ds);
    REQUIRE_FALSE(result.history.empty());
    REQUIRE(result.history[0].taus.size() == 2);
    CHECK(result.history[0].taus[0].first == "ia");
    CHECK(result.history[0].taus[1].first == "ca");

    std::ifstream hist("tt_tau/history.csv");
    std::string line;
    std::getline(hist, line);  // comment
    std::getline(hist, line);  // header
    CHECK(line.find("tau_ia") != std::string::npos);
    CHECK(line.find("tau_ca") != std::string::npos);
}

TEST_CASE("evaluate rejects an empty dataset") {
    Dataset ds = synth_clusters(3, 5, 2, 8, 23);
    TrainConfig cfg = small_config("tt_empty");
    cfg.epochs = 1;
    TrainResult result = train(cfg, ds);
    std::vector<size_t> none;
    CHECK_THROWS_AS(evaluate(result.model, ds, &none), ContractError);

    Dataset empty;
    empty.feature_dim = 3;
    empty.class_count = 2;
    CHECK_THROWS_AS(train(cfg, empty), ConfigError);
}

TEST_CASE("non-finite loss aborts with a diagnostic checkpoint") {
    Dataset ds = synth_clusters(3, 5, 2, 8, 29);
    TrainConfig cfg = small_config("tt_blowup");
    cfg.epochs = 50;
    cfg.lr = 1e306;  // one step pushes activations past the float range
    cfg.reg = Regularizer::None;
    CHECK_THROWS_AS(train(cfg, ds), NumericError);
    CHECK(std::filesystem::exists("tt_blowup/diagnostic.ckpt"));
}

TEST_CASE("config file parsing") {
    {
        std::ofstream out("tt_conf.cfg");
        out << "# a comment\n";
        out << "model.layers = nbof,dense(8),output\n";
        out << "nbof.codewords = 6\n";
        out << "nbof.kernel = hyperbolic\n";
        out << "attention.placement = ta\n";
        out << "tnbof.split = 0.25\n";
        out << "train.epochs = 9\n";
        out << "train.batch = 4\n";
        out << "train.lr = 0.002\n";
        out << "train.milestones = 3:0.1,6:0.1\n";
        out << "train.reg = decay:0.001\n";
        out << "train.seed = 99\n";
        out << "data.path = some.seqb\n";
        out << "data.folds = 4\n";
        out << "out.dir = somewhere\n";
    }
    TrainConfig cfg = TrainConfig::from_file("tt_conf.cfg");
    CHECK(cfg.codewords == 6);
    CHECK(cfg.kernel == Kernel::Hyperbolic);
    CHECK(cfg.placement_text == "ta");
    CHECK(cfg.tnbof_split == 0.25);
    CHECK(cfg.epochs == 9);
    CHECK(cfg.batch == 4);
    CHECK(cfg.lr == 0.002);
    CHECK(cfg.reg == Regularizer::WeightDecay);
    CHECK(cfg.weight_decay == 0.001);
    CHECK(cfg.seed == 99);
    CHECK(cfg.folds == 4);
    CHECK(cfg.out_dir == "somewhere");
    std::filesystem::remove("tt_conf.cfg");
}

TEST_CASE("config rejects unknown keys and bad values") {
    auto write_and_parse = [](const std::string& body) {
        std::ofstream out("tt_bad.cfg");
        out << body;
        out.close();
        return TrainConfig::from_file("tt_bad.cfg");
    };
    CHECK_THROWS_AS(write_and_parse("model.layers = nbof,output\nmodel.color = red\n"),
                    ConfigError);
    CHECK_THROWS_AS(write_and_parse("train.epochs = 5\n"), ConfigError);  // layers missing
    CHECK_THROWS_AS(write_and_parse("model.layers = nbof,output\ntrain.epochs = many\n"),
                    ConfigError);
    CHECK_THROWS_AS(write_and_parse("model.layers = nbof,output\ntrain.batch = 0\n"), ConfigError);
    CHECK_THROWS_AS(write_and_parse("model.layers = nbof,output\nnot a pair\n"), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_file("missing_file.cfg"), ConfigError);
    std::filesystem::remove("tt_bad.cfg");
}

TEST_CASE("checkpoint loader rejects malformed files") {
    {
        std::ofstream out("tt_garbage.ckpt");
        out << "not json at all {";
    }
    CHECK_THROWS_AS(load_checkpoint("tt_garbage.ckpt"), ParseError);
    std::filesystem::remove("tt_garbage.ckpt");

    {
        std::ofstream out("tt_partial.ckpt");
        out << R"({"format": 1, "epoch": 3})";  // missing sections
    }
    CHECK_THROWS_AS(load_checkpoint("tt_partial.ckpt"), ParseError);
    std::filesystem::remove("tt_partial.ckpt");

    {
        std::ofstream out("tt_future.ckpt");
        out << R"({"format": 99})";
    }
    CHECK_THROWS_AS(load_checkpoint("tt_future.ckpt"), ParseError);
    std::filesystem::remove("tt_future.ckpt");

    CHECK_THROWS_AS(load_checkpoint("tt_nowhere.ckpt"), ConfigError);
}

TEST_CASE("checkpoint with mismatched parameter shapes is rejected") {
    Dataset ds = synth_clusters(3, 5, 2, 8, 43);
    TrainConfig cfg = small_config("tt_tamper");
    cfg.epochs = 1;
    TrainResult result = train(cfg, ds);
    Checkpoint tampered = result.checkpoint;
    tampered.params[0].second.first = {1, 1};  // wrong shape for the first parameter
    tampered.params[0].second.second = {0.0};
    CHECK_THROWS_AS(model_from_checkpoint(tampered), ParseError);

    Checkpoint renamed = result.checkpoint;
    renamed.params[0].first = "no.such.parameter";
    CHECK_THROWS_AS(model_from_checkpoint(renamed), ParseError);
}

TEST_CASE("config hash tracks resume-relevant fields only") {
    TrainConfig a = small_config("x");
    TrainConfig b = a;
    b.epochs = 999;  // epoch budget may change between resume legs
    CHECK(a.hash() == b.hash());
    b.lr = 0.5;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("kmeans codebook initialization trains end to end") {
    Dataset ds = synth_clusters(4, 8, 2, 12, 37);
    TrainConfig cfg = small_config("tt_kmeans");
    cfg.epochs = 3;
    cfg.init = "kmeans";
    TrainResult result = train(cfg, ds);
    CHECK(result.history.size() == 3);

    // kmeans-seeded codewords sit on the data, far from the uniform init range
    double max_abs = 0.0;
    for (const auto& p : result.model.parameters()) {
        if (p.name.find("nbof.V") != std::string::npos) {
            for (double v : p.tensor.data()) max_abs = std::max(max_abs, std::abs(v));
        }
    }
    CHECK(max_abs > 1.0);  // anchors live at radius ~7
}

TEST_CASE("class-weighted training runs on imbalanced data") {
    Dataset ds = synth_clusters(4, 6, 2, 20, 31);
    // drop most of class 1 to unbalance
    Dataset skew;
    skew.feature_dim = ds.feature_dim;
    skew.class_count = 2;
    skew.class_names = ds.class_names;
    for (size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] == 1 && skew.labels.size() > 24) continue;
        skew.samples.push_back(ds.samples[i]);
        skew.seq_len.push_back(ds.seq_len[i]);
        skew.labels.push_back(ds.labels[i]);
    }
    TrainConfig cfg = small_config("tt_weights");
    cfg.epochs = 5;
    cfg.use_class_weights = true;
    TrainResult result = train(cfg, skew);
    CHECK(result.history.size() == 5);
}
