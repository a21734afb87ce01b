#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "nbof/train.hpp"

namespace nbof {

using nlohmann::json;

namespace {

json params_to_json(const std::vector<std::pair<std::string, std::pair<Shape, std::vector<double>>>>& params) {
    json out = json::object();
    for (const auto& [name, sv] : params) {
        out[name] = {{"shape", sv.first}, {"data", sv.second}};
    }
    return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json j;
    j["format"] = ckpt.format;
    j["config_hash"] = ckpt.config_hash;
    j["epoch"] = ckpt.epoch;
    j["model"] = {{"layers", ckpt.layers_text},
                  {"codewords", ckpt.codewords},
                  {"kernel", ckpt.kernel},
                  {"tnbof_split", ckpt.tnbof_split},
                  {"placement", ckpt.placement},
                  {"input_dim", ckpt.input_dim},
                  {"input_len", ckpt.input_len},
                  {"classes", ckpt.classes},
                  {"init_seed", ckpt.init_seed}};
    j["params"] = params_to_json(ckpt.params);
    json bn = json::object();
    for (const auto& [name, mv] : ckpt.bn) {
        bn[name] = {{"mean", mv.first}, {"var", mv.second}};
    }
    j["bn"] = bn;
    json adam = json::object();
    adam["t"] = ckpt.adam_t;
    json moments = json::object();
    for (const auto& [name, st] : ckpt.adam_state) {
        moments[name] = {{"m", st.m}, {"v", st.v}};
    }
    adam["state"] = moments;
    j["adam"] = adam;
    j["rng"] = {{"train", ckpt.train_rng_state}};
    j["class_weights"] = ckpt.class_weight_values;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
    out << j.dump();
    if (!out) throw ConfigError("checkpoint write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("checkpoint '" + path + "': " + e.what());
    }
    try {
        Checkpoint ckpt;
        ckpt.format = j.at("format").get<int>();
        if (ckpt.format != 1) {
            throw ParseError("checkpoint '" + path + "': unsupported format " +
                             std::to_string(ckpt.format));
        }
        ckpt.config_hash = j.at("config_hash").get<uint64_t>();
        ckpt.epoch = j.at("epoch").get<int>();
        const json& m = j.at("model");
        ckpt.layers_text = m.at("layers").get<std::string>();
        ckpt.codewords = m.at("codewords").get<int>();
        ckpt.kernel = m.at("kernel").get<std::string>();
        ckpt.tnbof_split = m.at("tnbof_split").get<double>();
        ckpt.placement = m.at("placement").get<std::string>();
        ckpt.input_dim = m.at("input_dim").get<int>();
        ckpt.input_len = m.at("input_len").get<int>();
        ckpt.classes = m.at("classes").get<int>();
        ckpt.init_seed = m.at("init_seed").get<uint64_t>();
        for (const auto& [name, pv] : j.at("params").items()) {
            ckpt.params.push_back(
                {name, {pv.at("shape").get<Shape>(), pv.at("data").get<std::vector<double>>()}});
        }
        for (const auto& [name, mv] : j.at("bn").items()) {
            ckpt.bn[name] = {mv.at("mean").get<std::vector<double>>(),
                             mv.at("var").get<std::vector<double>>()};
        }
        ckpt.adam_t = j.at("adam").at("t").get<int64_t>();
        for (const auto& [name, st] : j.at("adam").at("state").items()) {
            ckpt.adam_state[name] = {st.at("m").get<std::vector<double>>(),
                                     st.at("v").get<std::vector<double>>()};
        }
        ckpt.train_rng_state = j.at("rng").at("train").get<uint64_t>();
        ckpt.class_weight_values = j.at("class_weights").get<std::vector<double>>();
        return ckpt;
    } catch (const json::exception& e) {
        throw ParseError("checkpoint '" + path + "': " + e.what());
    }
}

Checkpoint snapshot(Model& model, const Adam& adam, uint64_t rng_state, int epoch,
                    uint64_t config_hash, const std::vector<double>& class_weights) {
    Checkpoint ckpt;
    ckpt.config_hash = config_hash;
    ckpt.epoch = epoch;
    ckpt.layers_text = layer_string(model.cfg.layers);
    ckpt.codewords = model.cfg.codewords;
    ckpt.kernel = kernel_name(model.cfg.kernel);
    ckpt.tnbof_split = model.cfg.tnbof_split;
    ckpt.placement = placement_string(model.cfg.placement);
    ckpt.input_dim = model.cfg.input_dim;
    ckpt.input_len = model.cfg.input_len;
    ckpt.classes = model.cfg.classes;
    ckpt.init_seed = model.cfg.init_seed;
    for (const auto& p : model.parameters()) {
        ckpt.params.push_back({p.name, {p.tensor.shape(), p.tensor.data()}});
    }
    for (const auto& [name, state] : model.bn_states()) {
        ckpt.bn[name] = {state->running_mean, state->running_var};
    }
    ckpt.adam_t = adam.step_count();
    ckpt.adam_state = adam.state();
    ckpt.train_rng_state = rng_state;
    ckpt.class_weight_values = class_weights;
    return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
    ModelConfig mc;
    mc.layers = parse_layer_string(ckpt.layers_text);
    mc.codewords = ckpt.codewords;
    mc.kernel = kernel_from_string(ckpt.kernel);
    mc.tnbof_split = ckpt.tnbof_split;
    mc.placement = placement_from_string(ckpt.placement);
    mc.input_dim = ckpt.input_dim;
    mc.input_len = ckpt.input_len;
    mc.classes = ckpt.classes;
    mc.init_seed = ckpt.init_seed;
    Model model = build_model(mc);

    auto params = model.parameters();
    if (params.size() != ckpt.params.size()) {
        throw ParseError("checkpoint: expected " + std::to_string(params.size()) +
                         " parameters, found " + std::to_string(ckpt.params.size()));
    }
    for (auto& p : params) {
        const auto it = std::find_if(ckpt.params.begin(), ckpt.params.end(),
                                     [&p](const auto& e) { return e.first == p.name; });
        if (it == ckpt.params.end()) {
            throw ParseError("checkpoint: missing parameter '" + p.name + "'");
        }
        if (it->second.first != p.tensor.shape()) {
            throw ParseError("checkpoint: parameter '" + p.name + "' has shape " +
                             shape_str(it->second.first) + ", model expects " +
                             shape_str(p.tensor.shape()));
        }
        p.tensor.leaf_data() = it->second.second;
    }
    for (auto& [name, state] : model.bn_states()) {
        const auto it = ckpt.bn.find(name);
        if (it == ckpt.bn.end()) throw ParseError("checkpoint: missing batch-norm state '" + name + "'");
        if (it->second.first.size() != state->running_mean.size()) {
            throw ParseError("checkpoint: batch-norm state '" + name + "' has wrong channel count");
        }
        state->running_mean = it->second.first;
        state->running_var = it->second.second;
    }
    return model;
}

}  // namespace nbof
