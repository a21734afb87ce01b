#include "nbof/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace nbof {

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r\n";
        const size_t a = s.find_first_not_of(ws);
        if (a == std::string::npos) return std::string();
        const size_t b = s.find_last_not_of(ws);
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        lineno++;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        }
        if (kv.count(key)) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        kv[key] = value;
    }
    return kv;
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

int parse_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected integer, got '" + v + "'");
    }
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected number, got '" + v + "'");
    }
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected unsigned integer, got '" + v + "'");
    }
}

}  // namespace

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv,
                                  const std::string& source) {
    static const std::vector<std::string> known = {
        "model.layers",   "nbof.codewords", "nbof.kernel",  "nbof.init",
        "attention.placement", "tnbof.split", "train.epochs", "train.batch",
        "train.lr",       "train.milestones", "train.reg",  "train.seed",
        "train.class_weights", "data.path",  "data.folds",   "out.dir"};
    for (const auto& [key, value] : kv) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError(source + ": unknown config key '" + key + "'");
        }
    }
    auto get = [&kv](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    TrainConfig cfg;
    if (const auto* v = get("model.layers")) cfg.layers_text = *v;
    if (cfg.layers_text.empty()) throw ConfigError(source + ": model.layers is required");
    if (const auto* v = get("nbof.codewords")) cfg.codewords = parse_int(*v, "nbof.codewords");
    if (const auto* v = get("nbof.kernel")) cfg.kernel = kernel_from_string(*v);
    if (const auto* v = get("nbof.init")) {
        if (*v != "uniform" && *v != "kmeans") {
            throw ConfigError(source + ": nbof.init must be uniform or kmeans");
        }
        cfg.init = *v;
    }
    if (const auto* v = get("attention.placement")) cfg.placement_text = *v;
    placement_from_string(cfg.placement_text);  // validate early
    if (const auto* v = get("tnbof.split")) cfg.tnbof_split = parse_double(*v, "tnbof.split");
    if (const auto* v = get("train.epochs")) cfg.epochs = parse_int(*v, "train.epochs");
    if (cfg.epochs < 0) throw ConfigError(source + ": train.epochs must be >= 0");
    if (const auto* v = get("train.batch")) cfg.batch = parse_int(*v, "train.batch");
    if (cfg.batch < 1) throw ConfigError(source + ": train.batch must be >= 1");
    if (const auto* v = get("train.lr")) cfg.lr = parse_double(*v, "train.lr");
    if (cfg.lr <= 0) throw ConfigError(source + ": train.lr must be positive");
    if (const auto* v = get("train.milestones")) cfg.milestones_text = *v;
    parse_milestones(cfg.lr, cfg.milestones_text);  // validate early
    if (const auto* v = get("train.reg")) {
        std::string text = *v;
        const size_t colon = text.find(':');
        double value = -1.0;
        if (colon != std::string::npos) {
            value = parse_double(text.substr(colon + 1), "train.reg");
            text = text.substr(0, colon);
        }
        cfg.reg = regularizer_from_string(text);
        if (value > 0.0) {
            if (cfg.reg == Regularizer::MaxNorm) cfg.max_norm = value;
            if (cfg.reg == Regularizer::WeightDecay) cfg.weight_decay = value;
        }
    }
    if (const auto* v = get("train.seed")) cfg.seed = parse_u64(*v, "train.seed");
    if (const auto* v = get("train.class_weights")) {
        cfg.use_class_weights = parse_int(*v, "train.class_weights") != 0;
    }
    if (const auto* v = get("data.path")) cfg.data_path = *v;
    if (const auto* v = get("data.folds")) cfg.folds = parse_int(*v, "data.folds");
    if (cfg.folds < 1) throw ConfigError(source + ": data.folds must be >= 1");
    if (const auto* v = get("out.dir")) cfg.out_dir = *v;
    return cfg;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    return from_map(parse_config_file(path), path);
}

// Everything that must agree for a checkpoint to resume under this config.
// train.epochs is deliberately absent: resuming extends the epoch budget.
std::string TrainConfig::canonical_text() const {
    std::ostringstream os;
    os << "model.layers=" << layers_text << "\n";
    os << "nbof.codewords=" << codewords << "\n";
    os << "nbof.kernel=" << kernel_name(kernel) << "\n";
    os << "nbof.init=" << init << "\n";
    os << "attention.placement=" << placement_string(placement_from_string(placement_text)) << "\n";
    os << "tnbof.split=" << tnbof_split << "\n";
    os << "train.batch=" << batch << "\n";
    os << "train.lr=" << lr << "\n";
    os << "train.milestones=" << milestones_text << "\n";
    os << "train.reg=" << regularizer_name(reg);
    if (reg == Regularizer::MaxNorm) os << ":" << max_norm;
    if (reg == Regularizer::WeightDecay) os << ":" << weight_decay;
    os << "\n";
    os << "train.seed=" << seed << "\n";
    os << "train.class_weights=" << (use_class_weights ? 1 : 0) << "\n";
    os << "data.path=" << data_path << "\n";
    os << "data.folds=" << folds << "\n";
    return os.str();
}

namespace {

ModelConfig model_config_for(const TrainConfig& cfg, const Dataset& ds) {
    if (ds.size() == 0) throw ConfigError("train: dataset is empty");
    if (ds.class_count < 2) throw ConfigError("train: dataset has fewer than 2 classes");
    ModelConfig mc;
    mc.layers = parse_layer_string(cfg.layers_text);
    mc.codewords = cfg.codewords;
    mc.kernel = cfg.kernel;
    mc.tnbof_split = cfg.tnbof_split;
    mc.placement = placement_from_string(cfg.placement_text);
    mc.input_dim = ds.feature_dim;
    mc.input_len = ds.fixed_length() ? ds.fixed_len() : 0;
    mc.classes = ds.class_count;
    mc.init_seed = cfg.seed;
    return mc;
}

void split_train_val(const TrainConfig& cfg, const Dataset& ds, std::vector<size_t>& train_idx,
                     std::vector<size_t>& val_idx) {
    if (cfg.folds >= 2) {
        auto folds = kfold_split(ds, cfg.folds, cfg.seed);
        train_idx = folds[0].train;
        val_idx = folds[0].test;
    } else {
        train_idx.resize(ds.size());
        for (size_t i = 0; i < ds.size(); ++i) train_idx[i] = i;
        val_idx = train_idx;  // no held-out split: validation falls back to the train set
    }
}

std::vector<double> resolve_class_weights(const TrainConfig& cfg, const Dataset& ds,
                                          const std::vector<size_t>& train_idx) {
    if (!cfg.use_class_weights) return std::vector<double>(static_cast<size_t>(ds.class_count), 1.0);
    std::vector<int64_t> counts(static_cast<size_t>(ds.class_count), 0);
    for (size_t i : train_idx) counts[static_cast<size_t>(ds.labels[i])]++;
    return class_weights_from_counts(counts);
}

}  // namespace

Metrics evaluate(Model& model, const Dataset& ds, const std::vector<size_t>* indices) {
    std::vector<size_t> all;
    if (!indices) {
        all.resize(ds.size());
        for (size_t i = 0; i < ds.size(); ++i) all[i] = i;
        indices = &all;
    }
    if (indices->empty()) throw ContractError("evaluate: empty dataset");
    Confusion cm(model.cfg.classes);
    for (size_t i : *indices) {
        const int predicted = model.predict(ds.sample_tensor(i));
        cm.at(ds.labels[i], predicted)++;
    }
    return metrics_from_confusion(cm);
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows,
                       const TrainConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write history file '" + path + "'");
    out << "# batch=" << cfg.batch << " seed=" << cfg.seed << " reg=" << regularizer_name(cfg.reg)
        << " placement=" << cfg.placement_text << " kernel=" << kernel_name(cfg.kernel) << "\n";
    out << "epoch,lr,train_loss,train_acc,val_acc,macro_f1";
    if (!rows.empty()) {
        for (const auto& [name, value] : rows[0].taus) {
            (void)value;
            out << ",tau_" << name;
        }
    }
    out << "\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.epoch << "," << r.lr << "," << r.train_loss << "," << r.train_acc << ","
            << r.val_acc << "," << r.macro_f1;
        for (const auto& [name, value] : r.taus) {
            (void)name;
            out << "," << value;
        }
        out << "\n";
    }
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds, const Checkpoint* resume,
                  bool quiet) {
    ds.validate();
    const ModelConfig mc = model_config_for(cfg, ds);
    const LrSchedule schedule = cfg.schedule();
    const uint64_t config_hash = cfg.hash();

    std::vector<size_t> train_idx, val_idx;
    split_train_val(cfg, ds, train_idx, val_idx);
    const std::vector<double> class_weights = resolve_class_weights(cfg, ds, train_idx);

    Model model;
    Adam adam;
    Rng train_rng(cfg.seed ^ 0x747261696e5f7267ull);
    int start_epoch = 0;

    if (resume) {
        if (resume->config_hash != config_hash) {
            throw ConfigError("resume: checkpoint was produced by a different config");
        }
        model = model_from_checkpoint(*resume);
        Adam::Config ac;
        ac.weight_decay = cfg.reg == Regularizer::WeightDecay ? cfg.weight_decay : 0.0;
        adam = Adam(ac);
        adam.restore(resume->adam_t, resume->adam_state);
        train_rng.set_state(resume->train_rng_state);
        start_epoch = resume->epoch;
        if (start_epoch > cfg.epochs) {
            throw ConfigError("resume: checkpoint is already past train.epochs");
        }
    } else {
        model = build_model(mc);
        if (cfg.init == "kmeans") {
            Rng kmeans_rng(cfg.seed ^ 0x6b6d65616e73ull);
            std::vector<Tensor> probes;
            const size_t max_probe = std::min<size_t>(train_idx.size(), 128);
            for (size_t i = 0; i < max_probe; ++i) probes.push_back(ds.sample_tensor(train_idx[i]));
            model.kmeans_init(probes, 4096, kmeans_rng);
        }
        Adam::Config ac;
        ac.weight_decay = cfg.reg == Regularizer::WeightDecay ? cfg.weight_decay : 0.0;
        adam = Adam(ac);
    }

    std::filesystem::create_directories(cfg.out_dir);
    auto params = model.parameters();
    auto norm_targets = model.max_norm_targets();

    TrainResult result;
    for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = lr_schedule_value(epoch, schedule);

        // seeded in-place shuffle of the training order
        std::vector<size_t> order = train_idx;
        for (size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[train_rng.below(static_cast<uint32_t>(i))]);
        }

        double loss_sum = 0.0;
        int64_t seen = 0;
        int64_t correct = 0;
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg.batch)) {
            const size_t end = std::min(order.size(), pos + static_cast<size_t>(cfg.batch));
            std::vector<Tensor> inputs;
            std::vector<int> batch_labels;
            inputs.reserve(end - pos);
            for (size_t i = pos; i < end; ++i) {
                inputs.push_back(ds.sample_tensor(order[i]));
                batch_labels.push_back(ds.labels[order[i]]);
            }

            ForwardOptions opt;
            opt.train = true;
            opt.rng = &train_rng;
            std::vector<Tensor> logits = model.forward(inputs, opt);

            Tensor loss;
            for (size_t i = 0; i < logits.size(); ++i) {
                Tensor li = weighted_cross_entropy(logits[i], batch_labels[i],
                                                   class_weights[static_cast<size_t>(batch_labels[i])]);
                loss = i == 0 ? li : add(loss, li);
                const auto& lv = logits[i].data();
                const int pred = static_cast<int>(std::max_element(lv.begin(), lv.end()) - lv.begin());
                if (pred == batch_labels[i]) correct++;
            }
            loss = scalar_mul(loss, 1.0 / static_cast<double>(logits.size()));

            if (!loss.all_finite()) {
                // leave a diagnostic checkpoint behind before aborting
                Checkpoint diag = snapshot(model, adam, train_rng.state(), epoch - 1, config_hash,
                                           class_weights);
                save_checkpoint(diag, cfg.out_dir + "/diagnostic.ckpt");
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   "; diagnostic checkpoint written to " + cfg.out_dir +
                                   "/diagnostic.ckpt");
            }

            loss.backward();
            adam.step(params, lr);
            if (cfg.reg == Regularizer::MaxNorm) {
                for (auto& target : norm_targets) apply_max_norm(target.tensor, cfg.max_norm);
            }
            adam.zero_grads(params);

            loss_sum += loss.value() * static_cast<double>(logits.size());
            seen += static_cast<int64_t>(logits.size());
        }

        Metrics val = evaluate(model, ds, &val_idx);

        HistoryRow row;
        row.epoch = epoch;
        row.lr = lr;
        row.train_loss = loss_sum / static_cast<double>(seen);
        row.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        row.val_acc = val.accuracy;
        row.macro_f1 = val.macro_f1;
        for (const auto& [name, block] : model.attention_blocks()) {
            row.taus.emplace_back(name, block->tau_value());
        }
        result.history.push_back(row);
        if (!quiet) {
            std::cout << "epoch " << epoch << " lr " << lr << " loss " << row.train_loss
                      << " train_acc " << row.train_acc << " val_acc " << row.val_acc << "\n";
        }
    }

    result.model = model;
    result.val_metrics = evaluate(model, ds, &val_idx);
    result.checkpoint =
        snapshot(model, adam, train_rng.state(), cfg.epochs, config_hash, class_weights);
    write_history_csv(cfg.out_dir + "/history.csv", result.history, cfg);
    save_checkpoint(result.checkpoint, cfg.out_dir + "/model.ckpt");
    return result;
}

}  // namespace nbof
