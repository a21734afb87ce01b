#include "nbof/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nbof {

namespace {

std::vector<std::string> split_tokens(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char ch : text) {
        if (ch == '(') depth++;
        if (ch == ')') depth--;
        if (ch == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

// splits "name(a,b,c)" into name and raw args
std::pair<std::string, std::vector<std::string>> parse_token(const std::string& token) {
    const size_t open = token.find('(');
    if (open == std::string::npos) return {trim(token), {}};
    if (token.back() != ')') throw ConfigError("malformed layer token '" + token + "'");
    std::string name = trim(token.substr(0, open));
    std::string inner = token.substr(open + 1, token.size() - open - 2);
    std::vector<std::string> args;
    for (const auto& a : split_tokens(inner, ',')) args.push_back(trim(a));
    return {name, args};
}

int to_int(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected integer for " + what + ", got '" + s + "'");
    }
}

double to_double(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected number for " + what + ", got '" + s + "'");
    }
}

}  // namespace

std::vector<LayerSpec> parse_layer_string(const std::string& text) {
    std::vector<LayerSpec> out;
    for (const auto& raw : split_tokens(text, ',')) {
        const auto [name, args] = parse_token(trim(raw));
        LayerSpec spec;
        if (name == "conv") {
            if (args.size() < 2 || args.size() > 3) {
                throw ConfigError("conv expects (filters, kernel[, stride]), got '" + raw + "'");
            }
            spec.kind = LayerKind::Conv;
            spec.filters = to_int(args[0], "conv filters");
            spec.kernel = to_int(args[1], "conv kernel");
            spec.stride = args.size() == 3 ? to_int(args[2], "conv stride") : 1;
        } else if (name == "bn") {
            spec.kind = LayerKind::BatchNorm;
        } else if (name == "relu") {
            spec.kind = LayerKind::Relu;
        } else if (name == "maxpool") {
            spec.kind = LayerKind::MaxPool;
            spec.window = args.empty() ? 2 : to_int(args[0], "maxpool window");
        } else if (name == "nbof") {
            spec.kind = LayerKind::NBoF;
        } else if (name == "tnbof") {
            spec.kind = LayerKind::TNBoF;
        } else if (name == "dense") {
            if (args.empty() || args.size() > 2) {
                throw ConfigError("dense expects (units[, relu|linear]), got '" + raw + "'");
            }
            spec.kind = LayerKind::Dense;
            spec.units = to_int(args[0], "dense units");
            if (args.size() == 2) {
                if (args[1] == "relu") {
                    spec.activation = Activation::Relu;
                } else if (args[1] == "linear") {
                    spec.activation = Activation::None;
                } else {
                    throw ConfigError("dense activation must be relu or linear, got '" + args[1] + "'");
                }
            }
        } else if (name == "dropout") {
            if (args.size() != 1) throw ConfigError("dropout expects (rate), got '" + raw + "'");
            spec.kind = LayerKind::Dropout;
            spec.rate = to_double(args[0], "dropout rate");
        } else if (name == "output") {
            spec.kind = LayerKind::Output;
            spec.units = args.empty() ? 0 : to_int(args[0], "output classes");
        } else {
            throw ConfigError("unknown layer '" + name + "'");
        }
        out.push_back(spec);
    }
    if (out.empty()) throw ConfigError("model.layers is empty");
    return out;
}

std::string layer_string(const std::vector<LayerSpec>& layers) {
    std::ostringstream os;
    for (size_t i = 0; i < layers.size(); ++i) {
        if (i) os << ",";
        const LayerSpec& s = layers[i];
        switch (s.kind) {
            case LayerKind::Conv:
                os << "conv(" << s.filters << "," << s.kernel << "," << s.stride << ")";
                break;
            case LayerKind::BatchNorm: os << "bn"; break;
            case LayerKind::Relu: os << "relu"; break;
            case LayerKind::MaxPool: os << "maxpool(" << s.window << ")"; break;
            case LayerKind::NBoF: os << "nbof"; break;
            case LayerKind::TNBoF: os << "tnbof"; break;
            case LayerKind::Dense:
                os << "dense(" << s.units << ","
                   << (s.activation == Activation::Relu ? "relu" : "linear") << ")";
                break;
            case LayerKind::Dropout: os << "dropout(" << s.rate << ")"; break;
            case LayerKind::Output:
                os << "output";
                if (s.units > 0) os << "(" << s.units << ")";
                break;
        }
    }
    return os.str();
}

Placement placement_from_string(const std::string& text) {
    Placement p;
    if (trim(text).empty() || text == "none") return p;
    for (const auto& raw : split_tokens(text, ',')) {
        const std::string t = trim(raw);
        if (t == "ca") {
            if (p.ca) throw ConfigError("attention placement 'ca' given twice");
            p.ca = true;
        } else if (t == "ta") {
            if (p.ta) throw ConfigError("attention placement 'ta' given twice");
            p.ta = true;
        } else if (t == "ia") {
            if (p.ia) throw ConfigError("attention placement 'ia' given twice");
            p.ia = true;
        } else {
            throw ConfigError("unknown attention placement '" + t + "' (expected ca, ta, ia, none)");
        }
    }
    return p;
}

std::string placement_string(const Placement& p) {
    std::string out;
    auto append = [&out](const char* tag) {
        if (!out.empty()) out += ",";
        out += tag;
    };
    if (p.ca) append("ca");
    if (p.ta) append("ta");
    if (p.ia) append("ia");
    return out.empty() ? "none" : out;
}

std::string trace_string(const std::vector<TraceEntry>& trace) {
    std::ostringstream os;
    for (size_t i = 0; i < trace.size(); ++i) {
        if (i) os << " -> ";
        os << trace[i].stage << " ";
        if (trace[i].cols == 0) {
            os << trace[i].rows;
        } else if (trace[i].cols == -1) {
            os << trace[i].rows << "x?";
        } else {
            os << trace[i].rows << "x" << trace[i].cols;
        }
    }
    return os.str();
}

namespace {

[[noreturn]] void build_fail(size_t idx, const std::string& what) {
    throw ConfigError("build_model: layer " + std::to_string(idx) + " (" + what + ")");
}

Tensor glorot(int fan_out, int fan_in, const Shape& shape, Rng& rng) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t = Tensor::uniform(shape, -a, a, rng);
    t.set_requires_grad(true);
    return t;
}

}  // namespace

Model build_model(const ModelConfig& cfg) {
    if (cfg.input_dim < 1) throw ConfigError("build_model: input feature dimension is unset");
    if (cfg.classes < 2) throw ConfigError("build_model: need at least 2 classes");
    if (cfg.codewords < 1) throw ConfigError("build_model: nbof.codewords must be >= 1");
    if (cfg.tnbof_split <= 0.0 || cfg.tnbof_split > 1.0) {
        throw ConfigError("build_model: tnbof.split must be in (0, 1]");
    }

    Model model;
    model.cfg = cfg;
    Rng rng(cfg.init_seed);

    int rows = cfg.input_dim;
    int cols = cfg.input_len > 0 ? cfg.input_len : -1;
    bool vector_stage = false;
    bool quantized = false;
    int output_seen = 0;
    model.trace.push_back({"input", rows, cols});

    for (size_t i = 0; i < cfg.layers.size(); ++i) {
        const LayerSpec& spec = cfg.layers[i];
        ModelLayer layer;
        layer.spec = spec;
        switch (spec.kind) {
            case LayerKind::Conv: {
                if (vector_stage) build_fail(i, "conv: requires a DxN matrix input, not a vector");
                if (spec.filters < 1 || spec.kernel < 1 || spec.stride < 1) {
                    build_fail(i, "conv: filters, kernel and stride must be >= 1");
                }
                if (cols > 0 && spec.kernel > cols) {
                    build_fail(i, "conv: kernel " + std::to_string(spec.kernel) +
                                      " longer than sequence " + std::to_string(cols));
                }
                layer.conv_w = glorot(spec.filters * spec.kernel, rows * spec.kernel,
                                      {spec.filters, rows, spec.kernel}, rng);
                layer.conv_b = Tensor::zeros({spec.filters});
                layer.conv_b.set_requires_grad(true);
                rows = spec.filters;
                if (cols > 0) cols = conv1d_output_len(cols, spec.kernel, spec.stride);
                model.trace.push_back({"conv", rows, cols});
                break;
            }
            case LayerKind::BatchNorm: {
                if (vector_stage) build_fail(i, "bn: requires a matrix input, not a vector");
                layer.gamma = Tensor::full({rows}, 1.0);
                layer.gamma.set_requires_grad(true);
                layer.beta = Tensor::zeros({rows});
                layer.beta.set_requires_grad(true);
                layer.bn_state = BatchNormState(rows);
                model.trace.push_back({"bn", rows, cols});
                break;
            }
            case LayerKind::Relu: {
                model.trace.push_back({"relu", rows, cols});
                break;
            }
            case LayerKind::MaxPool: {
                if (vector_stage) build_fail(i, "maxpool: requires a matrix input, not a vector");
                if (spec.window < 2) build_fail(i, "maxpool: window must be >= 2");
                if (cols > 0) {
                    if (cols < spec.window) {
                        build_fail(i, "maxpool: sequence " + std::to_string(cols) +
                                          " shorter than window " + std::to_string(spec.window));
                    }
                    cols /= spec.window;
                }
                model.trace.push_back({"maxpool", rows, cols});
                break;
            }
            case LayerKind::NBoF:
            case LayerKind::TNBoF: {
                if (vector_stage) build_fail(i, "nbof: requires a matrix input, not a vector");
                if (quantized) build_fail(i, "nbof: only one quantization stage per model");
                quantized = true;
                const bool dual = spec.kind == LayerKind::TNBoF;
                if (cfg.placement.ia) {
                    layer.ia = AttentionBlock::create(rows);
                    model.trace.push_back({"attention-ia", rows, cols});
                }
                layer.cb = Codebook::create(cfg.kernel, cfg.codewords, rows, rng);
                if (dual) layer.cb_short = Codebook::create(cfg.kernel, cfg.codewords, rows, rng);
                model.trace.push_back({dual ? "tnbof-quantize" : "nbof-quantize", cfg.codewords, cols});
                if (cfg.placement.ca) {
                    layer.ca = AttentionBlock::create(cfg.codewords);
                    model.trace.push_back({"attention-ca", cfg.codewords, cols});
                }
                if (cfg.placement.ta) {
                    if (cols <= 0) {
                        build_fail(i, "ta: temporal attention requires fixed-length sequences "
                                      "but the input length is variable");
                    }
                    layer.ta = AttentionBlock::create(cols);
                    if (dual) {
                        layer.ta_short = AttentionBlock::create(tnbof_short_window(cols, cfg.tnbof_split));
                    }
                    model.trace.push_back({"attention-ta", cfg.codewords, cols});
                }
                rows = dual ? 2 * cfg.codewords : cfg.codewords;
                cols = 0;
                vector_stage = true;
                model.trace.push_back({"histogram", rows, 0});
                break;
            }
            case LayerKind::Dense: {
                if (!vector_stage) {
                    build_fail(i, "dense: requires a vector input but got a " + std::to_string(rows) +
                                      "-row matrix (place it after the quantization stage)");
                }
                if (spec.units < 1) build_fail(i, "dense: units must be >= 1");
                layer.dense_w = glorot(spec.units, rows, {spec.units, rows}, rng);
                layer.dense_b = Tensor::zeros({spec.units});
                layer.dense_b.set_requires_grad(true);
                rows = spec.units;
                model.trace.push_back({"dense", rows, 0});
                break;
            }
            case LayerKind::Dropout: {
                if (spec.rate < 0.0 || spec.rate >= 1.0) {
                    build_fail(i, "dropout: rate must be in [0, 1)");
                }
                model.trace.push_back({"dropout", rows, cols});
                break;
            }
            case LayerKind::Output: {
                if (!vector_stage) build_fail(i, "output: requires a vector input");
                if (output_seen) build_fail(i, "output: duplicate output layer");
                if (spec.units != 0 && spec.units != cfg.classes) {
                    build_fail(i, "output: layer declares " + std::to_string(spec.units) +
                                      " classes but the task has " + std::to_string(cfg.classes));
                }
                layer.spec.units = cfg.classes;
                layer.dense_w = glorot(cfg.classes, rows, {cfg.classes, rows}, rng);
                layer.dense_b = Tensor::zeros({cfg.classes});
                layer.dense_b.set_requires_grad(true);
                rows = cfg.classes;
                output_seen++;
                model.trace.push_back({"output", rows, 0});
                break;
            }
        }
        model.layers.push_back(std::move(layer));
    }

    if (!quantized) throw ConfigError("build_model: model has no nbof/tnbof stage");
    if (!output_seen) throw ConfigError("build_model: model has no output layer");
    if (cfg.layers.back().kind != LayerKind::Output) {
        throw ConfigError("build_model: output must be the last layer");
    }
    return model;
}

int Model::quantize_stage() const {
    for (size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].spec.kind == LayerKind::NBoF || layers[i].spec.kind == LayerKind::TNBoF) {
            return static_cast<int>(i);
        }
    }
    throw StateError("model has no quantization stage");
}

namespace {

Tensor quantize_with_placements(const Tensor& x, const ModelLayer& layer, const ModelConfig& cfg,
                                Tensor* mask_out) {
    Tensor cur = x;
    if (layer.ia) cur = input_attention(cur, *layer.ia, mask_out);
    if (layer.spec.kind == LayerKind::NBoF) {
        Tensor phi = quantize(cur, layer.cb);
        if (layer.ca) phi = codeword_attention(phi, *layer.ca);
        if (layer.ta) phi = temporal_attention(phi, *layer.ta);
        return accumulate_histogram(phi);
    }
    // dual codebook: long branch over the whole sequence, short branch over
    // the trailing window; each gets the same CA block, TA blocks are sized
    // per branch.
    const int n = cur.dim(1);
    const int w = tnbof_short_window(n, cfg.tnbof_split);
    Tensor phi_long = quantize(cur, layer.cb);
    Tensor phi_short = quantize(slice_cols(cur, n - w, n), layer.cb_short);
    if (layer.ca) {
        phi_long = codeword_attention(phi_long, *layer.ca);
        phi_short = codeword_attention(phi_short, *layer.ca);
    }
    if (layer.ta) {
        phi_long = temporal_attention(phi_long, *layer.ta);
        phi_short = temporal_attention(phi_short, *layer.ta_short);
    }
    return concat(accumulate_histogram(phi_long), accumulate_histogram(phi_short));
}

}  // namespace

std::vector<Tensor> Model::forward(const std::vector<Tensor>& inputs, const ForwardOptions& opt) {
    if (inputs.empty()) throw ContractError("model forward: empty batch");
    for (const Tensor& x : inputs) {
        if (x.rank() != 2 || x.dim(0) != cfg.input_dim) {
            throw ShapeError("model forward: sample must be " + std::to_string(cfg.input_dim) +
                             "xN, got " + shape_str(x.shape()));
        }
        if (cfg.placement.ta && cfg.input_len > 0 && x.dim(1) != cfg.input_len) {
            throw ShapeError("model forward: temporal attention built for N=" +
                             std::to_string(cfg.input_len) + " but sample has N=" +
                             std::to_string(x.dim(1)));
        }
    }

    std::vector<Tensor> cur = inputs;
    for (auto& layer : layers) {
        switch (layer.spec.kind) {
            case LayerKind::Conv:
                for (auto& t : cur) t = conv1d(t, layer.conv_w, layer.conv_b, layer.spec.stride);
                break;
            case LayerKind::BatchNorm: {
                if (cur.size() == 1) {
                    cur[0] = opt.train
                                 ? batchnorm_train(cur[0], layer.gamma, layer.beta, layer.bn_state)
                                 : batchnorm_eval(cur[0], layer.gamma, layer.beta, layer.bn_state);
                } else {
                    Tensor stacked = stack_batch(cur);
                    Tensor normed =
                        opt.train ? batchnorm_train(stacked, layer.gamma, layer.beta, layer.bn_state)
                                  : batchnorm_eval(stacked, layer.gamma, layer.beta, layer.bn_state);
                    for (size_t i = 0; i < cur.size(); ++i)
                        cur[i] = slice_batch(normed, static_cast<int>(i));
                }
                break;
            }
            case LayerKind::Relu:
                for (auto& t : cur) t = relu(t);
                break;
            case LayerKind::MaxPool:
                for (auto& t : cur) t = maxpool1d(t, layer.spec.window);
                break;
            case LayerKind::NBoF:
            case LayerKind::TNBoF:
                for (size_t i = 0; i < cur.size(); ++i) {
                    Tensor mask;
                    cur[i] = quantize_with_placements(cur[i], layer, cfg,
                                                      opt.ia_masks ? &mask : nullptr);
                    if (opt.ia_masks) opt.ia_masks->push_back(mask);
                }
                break;
            case LayerKind::Dense:
                for (auto& t : cur) t = dense(t, layer.dense_w, layer.dense_b, layer.spec.activation);
                break;
            case LayerKind::Dropout:
                if (opt.train) {
                    if (!opt.rng) throw StateError("model forward: dropout in train mode needs an rng");
                    for (auto& t : cur) t = dropout(t, layer.spec.rate, true, *opt.rng);
                }
                break;
            case LayerKind::Output:
                for (auto& t : cur) t = dense(t, layer.dense_w, layer.dense_b, Activation::None);
                break;
        }
    }
    return cur;
}

Tensor Model::forward_one(const Tensor& input, const ForwardOptions& opt) {
    return forward(std::vector<Tensor>{input}, opt)[0];
}

int Model::predict(const Tensor& input) {
    NoGradGuard no_grad;
    ForwardOptions opt;
    Tensor logits = forward_one(input, opt);
    const auto& d = logits.data();
    return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

namespace {

std::string layer_prefix(size_t idx, const char* kind) {
    return "L" + std::to_string(idx) + "." + kind;
}

}  // namespace

std::vector<NamedParam> Model::parameters() {
    std::vector<NamedParam> out;
    for (size_t i = 0; i < layers.size(); ++i) {
        ModelLayer& layer = layers[i];
        switch (layer.spec.kind) {
            case LayerKind::Conv:
                out.push_back({layer_prefix(i, "conv.W"), layer.conv_w});
                out.push_back({layer_prefix(i, "conv.b"), layer.conv_b});
                break;
            case LayerKind::BatchNorm:
                out.push_back({layer_prefix(i, "bn.gamma"), layer.gamma});
                out.push_back({layer_prefix(i, "bn.beta"), layer.beta});
                break;
            case LayerKind::NBoF:
            case LayerKind::TNBoF: {
                const bool dual = layer.spec.kind == LayerKind::TNBoF;
                const char* base = dual ? "tnbof" : "nbof";
                if (layer.ia) {
                    for (auto& p : layer.ia->parameters(layer_prefix(i, base) + ".ia"))
                        out.push_back(p);
                }
                for (auto& p : layer.cb.parameters(layer_prefix(i, base) + (dual ? ".long" : "")))
                    out.push_back(p);
                if (dual) {
                    for (auto& p : layer.cb_short.parameters(layer_prefix(i, base) + ".short"))
                        out.push_back(p);
                }
                if (layer.ca) {
                    for (auto& p : layer.ca->parameters(layer_prefix(i, base) + ".ca"))
                        out.push_back(p);
                }
                if (layer.ta) {
                    for (auto& p : layer.ta->parameters(layer_prefix(i, base) + ".ta"))
                        out.push_back(p);
                }
                if (layer.ta_short) {
                    for (auto& p : layer.ta_short->parameters(layer_prefix(i, base) + ".ta_short"))
                        out.push_back(p);
                }
                break;
            }
            case LayerKind::Dense:
                out.push_back({layer_prefix(i, "dense.W"), layer.dense_w});
                out.push_back({layer_prefix(i, "dense.b"), layer.dense_b});
                break;
            case LayerKind::Output:
                out.push_back({layer_prefix(i, "output.W"), layer.dense_w});
                out.push_back({layer_prefix(i, "output.b"), layer.dense_b});
                break;
            default:
                break;
        }
    }
    return out;
}

std::vector<NamedParam> Model::max_norm_targets() {
    std::vector<NamedParam> out;
    for (size_t i = 0; i < layers.size(); ++i) {
        ModelLayer& layer = layers[i];
        switch (layer.spec.kind) {
            case LayerKind::Dense:
                out.push_back({layer_prefix(i, "dense.W"), layer.dense_w});
                break;
            case LayerKind::Output:
                out.push_back({layer_prefix(i, "output.W"), layer.dense_w});
                break;
            case LayerKind::NBoF:
                out.push_back({layer_prefix(i, "nbof.V"), layer.cb.codewords});
                break;
            case LayerKind::TNBoF:
                out.push_back({layer_prefix(i, "tnbof.long.V"), layer.cb.codewords});
                out.push_back({layer_prefix(i, "tnbof.short.V"), layer.cb_short.codewords});
                break;
            default:
                break;
        }
    }
    return out;
}

std::vector<std::pair<std::string, BatchNormState*>> Model::bn_states() {
    std::vector<std::pair<std::string, BatchNormState*>> out;
    for (size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].spec.kind == LayerKind::BatchNorm) {
            out.push_back({layer_prefix(i, "bn"), &layers[i].bn_state});
        }
    }
    return out;
}

std::vector<std::pair<std::string, const AttentionBlock*>> Model::attention_blocks() const {
    std::vector<std::pair<std::string, const AttentionBlock*>> out;
    for (const auto& layer : layers) {
        if (layer.ia) out.push_back({"ia", &*layer.ia});
        if (layer.ca) out.push_back({"ca", &*layer.ca});
        if (layer.ta) out.push_back({"ta", &*layer.ta});
        if (layer.ta_short) out.push_back({"ta_short", &*layer.ta_short});
    }
    return out;
}

void Model::kmeans_init(const std::vector<Tensor>& probe_inputs, int max_columns, Rng& rng) {
    const int stage = quantize_stage();
    NoGradGuard no_grad;

    // Collect quantization-stage feature columns by running the matrix prefix
    // (attention and dropout skipped: both start as near-identity).
    std::vector<std::vector<double>> columns;
    for (const Tensor& input : probe_inputs) {
        Tensor cur = input;
        for (int i = 0; i < stage; ++i) {
            ModelLayer& layer = layers[i];
            switch (layer.spec.kind) {
                case LayerKind::Conv:
                    cur = conv1d(cur, layer.conv_w, layer.conv_b, layer.spec.stride);
                    break;
                case LayerKind::BatchNorm:
                    cur = batchnorm_eval(cur, layer.gamma, layer.beta, layer.bn_state);
                    break;
                case LayerKind::Relu:
                    cur = relu(cur);
                    break;
                case LayerKind::MaxPool:
                    cur = maxpool1d(cur, layer.spec.window);
                    break;
                default:
                    break;
            }
        }
        const int d = cur.dim(0);
        const int n = cur.dim(1);
        for (int j = 0; j < n; ++j) {
            std::vector<double> col(static_cast<size_t>(d));
            for (int r = 0; r < d; ++r) col[r] = cur.at(r, j);
            columns.push_back(std::move(col));
        }
        if (static_cast<int>(columns.size()) >= max_columns) break;
    }
    if (static_cast<int>(columns.size()) > max_columns) columns.resize(max_columns);

    ModelLayer& qlayer = layers[stage];
    const int dim = qlayer.cb.feature_dim;
    auto seed_codebook = [&](Codebook& cb) {
        if (static_cast<int>(columns.size()) < cb.num_codewords) {
            throw ConfigError("kmeans init: only " + std::to_string(columns.size()) +
                              " feature columns for " + std::to_string(cb.num_codewords) +
                              " codewords");
        }
        auto centers = kmeans_centers(columns, cb.num_codewords, dim, 25, rng);
        cb.codewords.leaf_data() = std::move(centers);
    };
    seed_codebook(qlayer.cb);
    if (qlayer.spec.kind == LayerKind::TNBoF) seed_codebook(qlayer.cb_short);
}

}  // namespace nbof
