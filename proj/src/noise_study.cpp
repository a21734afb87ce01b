#include "nbof/noise_study.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace nbof {

double StudyCell::mean() const {
    if (accuracies.empty()) throw ContractError("study cell is empty");
    double s = 0.0;
    for (double a : accuracies) s += a;
    return s / static_cast<double>(accuracies.size());
}

double StudyCell::stddev() const {
    const double m = mean();
    double s = 0.0;
    for (double a : accuracies) s += (a - m) * (a - m);
    return std::sqrt(s / static_cast<double>(accuracies.size()));
}

NoiseStudyConfig NoiseStudyConfig::from_map(const std::map<std::string, std::string>& kv,
                                            const std::string& source) {
    static const std::vector<std::string> known = {
        "data.synth",     "study.noise_bands", "study.seeds", "study.base_seed",
        "study.tnbof",    "model.layers",      "nbof.codewords", "nbof.kernel",
        "tnbof.split",    "train.epochs",      "train.batch", "train.lr",
        "train.milestones", "train.reg",       "data.folds",  "out.dir"};
    for (const auto& [key, value] : kv) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError(source + ": unknown noise-study key '" + key + "'");
        }
    }
    auto get = [&kv](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    NoiseStudyConfig cfg;
    if (const auto* v = get("data.synth")) cfg.synth_spec = *v;
    if (const auto* v = get("study.noise_bands")) cfg.noise_bands = std::stoi(*v);
    if (const auto* v = get("study.seeds")) cfg.seeds = std::stoi(*v);
    if (const auto* v = get("study.base_seed")) cfg.base_seed = std::stoull(*v);
    if (const auto* v = get("study.tnbof")) cfg.include_tnbof = std::stoi(*v) != 0;
    if (const auto* v = get("model.layers")) cfg.layers_text = *v;
    if (const auto* v = get("nbof.codewords")) cfg.codewords = std::stoi(*v);
    if (const auto* v = get("nbof.kernel")) cfg.kernel = kernel_from_string(*v);
    if (const auto* v = get("tnbof.split")) cfg.tnbof_split = std::stod(*v);
    if (const auto* v = get("train.epochs")) cfg.epochs = std::stoi(*v);
    if (const auto* v = get("train.batch")) cfg.batch = std::stoi(*v);
    if (const auto* v = get("train.lr")) cfg.lr = std::stod(*v);
    if (const auto* v = get("train.milestones")) cfg.milestones_text = *v;
    if (const auto* v = get("train.reg")) cfg.reg = regularizer_from_string(*v);
    if (const auto* v = get("data.folds")) cfg.folds = std::stoi(*v);
    if (const auto* v = get("out.dir")) cfg.out_dir = *v;
    if (cfg.seeds < 3) {
        throw ConfigError(source + ": study.seeds must be >= 3 (variance is unreportable below that)");
    }
    if (cfg.noise_bands < 1) throw ConfigError(source + ": study.noise_bands must be >= 1");
    return cfg;
}

NoiseStudyConfig NoiseStudyConfig::from_file(const std::string& path) {
    return from_map(parse_config_file(path), path);
}

const StudyCell& NoiseStudyReport::cell(const std::string& model, const std::string& data) const {
    auto it = cells.find(model + "/" + data);
    if (it == cells.end()) throw ContractError("no study cell for " + model + "/" + data);
    return it->second;
}

namespace {

std::string format_cell(const StudyCell& cell) {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << 100.0 * cell.mean() << "+-" << 100.0 * cell.stddev();
    return os.str();
}

TrainConfig run_config(const NoiseStudyConfig& cfg, const std::string& placement,
                       bool tnbof_layers, uint64_t seed, const std::string& out_dir) {
    TrainConfig tc;
    tc.layers_text = cfg.layers_text;
    if (cfg.layers_text.find("tnbof") != std::string::npos) {
        throw ConfigError("noise study: model.layers must use the plain nbof token; "
                          "study.tnbof adds the dual-codebook variants");
    }
    if (tnbof_layers) {
        // swap the quantization token; everything else stays identical
        std::string t = tc.layers_text;
        const size_t pos = t.find("nbof");
        if (pos == std::string::npos) throw ConfigError("noise study: model.layers has no nbof stage");
        t.replace(pos, 4, "tnbof");
        tc.layers_text = t;
    }
    tc.codewords = cfg.codewords;
    tc.kernel = cfg.kernel;
    tc.tnbof_split = cfg.tnbof_split;
    tc.placement_text = placement;
    tc.epochs = cfg.epochs;
    tc.batch = cfg.batch;
    tc.lr = cfg.lr;
    tc.milestones_text = cfg.milestones_text;
    tc.reg = cfg.reg;
    tc.seed = seed;
    tc.folds = cfg.folds;
    tc.out_dir = out_dir;
    return tc;
}

}  // namespace

NoiseStudyReport run_noise_study(const NoiseStudyConfig& cfg, bool quiet) {
    if (cfg.seeds < 3) {
        throw ConfigError("noise study: need at least 3 seeds to report variance");
    }
    NoiseStudyReport report;
    report.seeds = cfg.seeds;
    report.model_names = {"NBoF", "NBoF-IA"};
    if (cfg.include_tnbof) {
        report.model_names.push_back("TNBoF");
        report.model_names.push_back("TNBoF-IA");
    }

    std::filesystem::create_directories(cfg.out_dir);
    double mask_orig_sum = 0.0, mask_inj_sum = 0.0;
    size_t mask_count = 0;

    for (int s = 0; s < cfg.seeds; ++s) {
        const uint64_t seed = cfg.base_seed + static_cast<uint64_t>(s);
        Dataset clean = synth_from_spec(cfg.synth_spec + ",seed=" + std::to_string(seed));
        Dataset noisy = inject_noise_bands(clean, cfg.noise_bands, seed * 7919u + 13u);

        for (const std::string& model_name : report.model_names) {
            const bool tnbof = model_name.rfind("TNBoF", 0) == 0;
            const bool ia = model_name.find("-IA") != std::string::npos;
            const std::string placement = ia ? "ia" : "none";
            for (const char* data_name : {"clean", "noisy"}) {
                const Dataset& ds = std::string(data_name) == "clean" ? clean : noisy;
                const std::string run_dir = cfg.out_dir + "/run_" + model_name + "_" + data_name +
                                            "_s" + std::to_string(s);
                TrainConfig tc = run_config(cfg, placement, tnbof, seed, run_dir);
                if (!quiet) {
                    std::cout << "noise-study: seed " << seed << " " << model_name << " on "
                              << data_name << " data\n";
                }
                TrainResult res = train(tc, ds, nullptr, true);
                report.cells[model_name + "/" + data_name].accuracies.push_back(
                    res.val_metrics.accuracy);

                if (ia && !tnbof && std::string(data_name) == "noisy") {
                    // tau trajectory of the IA block
                    std::vector<double> taus;
                    for (const auto& row : res.history) {
                        for (const auto& [name, value] : row.taus) {
                            if (name == "ia") taus.push_back(value);
                        }
                    }
                    report.ia_tau_per_epoch.push_back(std::move(taus));

                    // mean attention-mask weight on original vs injected series
                    auto folds = kfold_split(ds, tc.folds, tc.seed);
                    NoGradGuard no_grad;
                    for (size_t idx : folds[0].test) {
                        std::vector<Tensor> masks;
                        ForwardOptions opt;
                        opt.ia_masks = &masks;
                        res.model.forward({ds.sample_tensor(idx)}, opt);
                        const Tensor& mask = masks[0];  // N x (D + bands)
                        const int n = mask.dim(0);
                        const int d_total = mask.dim(1);
                        const int d_orig = clean.feature_dim;
                        double so = 0.0, si = 0.0;
                        for (int i = 0; i < n; ++i) {
                            for (int j = 0; j < d_orig; ++j) so += mask.at(i, j);
                            for (int j = d_orig; j < d_total; ++j) si += mask.at(i, j);
                        }
                        MaskRow row;
                        row.seed = seed;
                        row.sample = idx;
                        row.mean_original = so / (static_cast<double>(n) * d_orig);
                        row.mean_injected = si / (static_cast<double>(n) * (d_total - d_orig));
                        mask_orig_sum += row.mean_original;
                        mask_inj_sum += row.mean_injected;
                        mask_count++;
                        report.mask_rows.push_back(row);
                    }
                }
            }
        }
    }

    if (mask_count > 0) {
        report.mask_mean_original = mask_orig_sum / static_cast<double>(mask_count);
        report.mask_mean_injected = mask_inj_sum / static_cast<double>(mask_count);
    }
    return report;
}

std::string NoiseStudyReport::text() const {
    std::ostringstream os;
    os << "noise-resilience study over " << seeds
       << " seeds; cells are test accuracy %, mean+-std\n\n";
    os << "model        clean            noisy\n";
    for (const auto& name : model_names) {
        os << name;
        for (size_t i = name.size(); i < 13; ++i) os << ' ';
        const std::string c = format_cell(cell(name, "clean"));
        os << c;
        for (size_t i = c.size(); i < 17; ++i) os << ' ';
        os << format_cell(cell(name, "noisy")) << "\n";
    }
    os << "\ninput-attention mask mean weight (noisy NBoF-IA, held-out samples):\n";
    os.precision(6);
    os << std::fixed << "  original rows: " << mask_mean_original << "\n";
    os << "  injected rows: " << mask_mean_injected << "\n";
    if (!ia_tau_per_epoch.empty() && !ia_tau_per_epoch[0].empty()) {
        os << "\ntau of the IA block per epoch (noisy NBoF-IA, mean over seeds):\n  ";
        const size_t epochs = ia_tau_per_epoch[0].size();
        os.precision(4);
        for (size_t e = 0; e < epochs; ++e) {
            double sum = 0.0;
            for (const auto& traj : ia_tau_per_epoch) sum += traj[e];
            os << sum / static_cast<double>(ia_tau_per_epoch.size());
            os << (e + 1 == epochs ? "\n" : " ");
        }
    }
    return os.str();
}

void write_noise_study_files(const NoiseStudyReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/noise_study.csv", std::ios::trunc);
        out << "model,data,seed_index,accuracy\n";
        out.precision(17);
        for (const auto& name : report.model_names) {
            for (const char* data : {"clean", "noisy"}) {
                const auto& cell = report.cell(name, data);
                for (size_t i = 0; i < cell.accuracies.size(); ++i) {
                    out << name << "," << data << "," << i << "," << cell.accuracies[i] << "\n";
                }
            }
        }
    }
    {
        std::ofstream out(out_dir + "/noise_masks.csv", std::ios::trunc);
        out << "seed,sample,mean_mask_original,mean_mask_injected\n";
        out.precision(17);
        for (const auto& row : report.mask_rows) {
            out << row.seed << "," << row.sample << "," << row.mean_original << ","
                << row.mean_injected << "\n";
        }
    }
    {
        std::ofstream out(out_dir + "/noise_tau.csv", std::ios::trunc);
        out << "seed_index,epoch,tau_ia\n";
        out.precision(17);
        for (size_t s = 0; s < report.ia_tau_per_epoch.size(); ++s) {
            for (size_t e = 0; e < report.ia_tau_per_epoch[s].size(); ++e) {
                out << s << "," << e + 1 << "," << report.ia_tau_per_epoch[s][e] << "\n";
            }
        }
    }
    {
        std::ofstream out(out_dir + "/report.txt", std::ios::trunc);
        out << report.text();
    }
}

}  // namespace nbof
