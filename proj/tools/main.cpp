#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "nbof/dataset.hpp"
#include "nbof/gradcheck.hpp"
#include "nbof/noise_study.hpp"
#include "nbof/train.hpp"

namespace {

struct GlobalFlags {
    bool quiet = false;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
};

void print_metrics(const nbof::Metrics& m, std::ostream& os) {
    os << "confusion matrix (rows actual, cols predicted):\n"
       << nbof::format_confusion(m.confusion);
    os.precision(4);
    os << std::fixed;
    os << "samples     " << m.confusion.total() << "\n";
    os << "accuracy    " << m.accuracy << "\n";
    os << "macro_f1    " << m.macro_f1 << "\n";
    if (m.has_sens_spec) os << "sens_spec   " << m.sens_spec << "\n";
}

int cmd_train(const std::string& config_path, const std::string& resume_path,
              const GlobalFlags& flags) {
    nbof::TrainConfig cfg = nbof::TrainConfig::from_file(config_path);
    if (flags.seed_set) cfg.seed = flags.seed;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (cfg.data_path.empty()) throw nbof::ConfigError(config_path + ": data.path is required");

    nbof::Dataset ds = nbof::load_seqb(cfg.data_path);
    std::optional<nbof::Checkpoint> resume;
    if (!resume_path.empty()) resume = nbof::load_checkpoint(resume_path);

    nbof::TrainResult result =
        nbof::train(cfg, ds, resume ? &*resume : nullptr, flags.quiet);
    if (!flags.quiet) {
        std::cout << "trained " << result.history.size() << " epoch(s); outputs in " << cfg.out_dir
                  << "\n";
        std::cout << "validation metrics"
                  << (cfg.folds >= 2 ? " (fold 0 of " + std::to_string(cfg.folds) + ")"
                                     : " (train set; no folds)")
                  << ":\n";
        print_metrics(result.val_metrics, std::cout);
    }
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path, const GlobalFlags& flags) {
    nbof::Checkpoint ckpt = nbof::load_checkpoint(ckpt_path);
    nbof::Model model = nbof::model_from_checkpoint(ckpt);
    nbof::Dataset ds = nbof::load_seqb(data_path);
    nbof::Metrics m = nbof::evaluate(model, ds);
    print_metrics(m, std::cout);
    if (!flags.out_dir.empty()) {
        std::filesystem::create_directories(flags.out_dir);
        std::ofstream out(flags.out_dir + "/eval.csv", std::ios::trunc);
        out.precision(17);
        out << "metric,value\naccuracy," << m.accuracy << "\nmacro_f1," << m.macro_f1 << "\n";
        if (m.has_sens_spec) out << "sens_spec," << m.sens_spec << "\n";
    }
    return 0;
}

int cmd_gradcheck(const std::string& module, double tol, int seeds, const GlobalFlags& flags) {
    auto results = nbof::run_gradcheck_suite(seeds, 1e-4, tol, module);
    bool all_pass = true;
    for (const auto& r : results) {
        all_pass = all_pass && r.report.pass;
        std::cout << (r.report.pass ? "pass" : "FAIL") << "  " << r.fragment;
        for (size_t i = r.fragment.size(); i < 24; ++i) std::cout << ' ';
        std::cout.precision(3);
        std::cout << std::scientific << "max rel err " << r.report.max_rel_err << "\n";
    }
    if (!flags.out_dir.empty()) {
        std::filesystem::create_directories(flags.out_dir);
        std::ofstream out(flags.out_dir + "/gradcheck.csv", std::ios::trunc);
        out << "fragment,max_rel_err,pass\n";
        out.precision(17);
        for (const auto& r : results) {
            out << r.fragment << "," << r.report.max_rel_err << "," << (r.report.pass ? 1 : 0)
                << "\n";
        }
    }
    std::cout << (all_pass ? "all layers pass" : "gradient check FAILED") << " (tol " << tol
              << ", " << seeds << " seeds)\n";
    return all_pass ? 0 : 1;
}

int cmd_synth(const std::string& spec, const std::string& out_path, const GlobalFlags& flags) {
    std::string effective = spec;
    if (flags.seed_set) effective += ",seed=" + std::to_string(flags.seed);
    nbof::Dataset ds = nbof::synth_from_spec(effective);
    nbof::write_seqb(ds, out_path);
    if (!flags.quiet) {
        std::cout << "wrote " << ds.size() << " samples (" << ds.feature_dim << "x"
                  << (ds.fixed_length() ? std::to_string(ds.fixed_len()) : std::string("var"))
                  << ", " << ds.class_count << " classes) to " << out_path << "\n";
        std::cout << "provenance: " << ds.provenance << "\n";
    }
    return 0;
}

int cmd_noise_study(const std::string& config_path, const GlobalFlags& flags) {
    nbof::NoiseStudyConfig cfg = nbof::NoiseStudyConfig::from_file(config_path);
    if (flags.seed_set) cfg.base_seed = flags.seed;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    nbof::NoiseStudyReport report = nbof::run_noise_study(cfg, flags.quiet);
    nbof::write_noise_study_files(report, cfg.out_dir);
    std::cout << report.text();
    if (!flags.quiet) std::cout << "\nfiles written under " << cfg.out_dir << "\n";
    return 0;
}

int cmd_inspect(const std::string& ckpt_path) {
    nbof::Checkpoint ckpt = nbof::load_checkpoint(ckpt_path);
    std::cout << "checkpoint format " << ckpt.format << ", epoch " << ckpt.epoch << "\n";
    std::cout << "config hash " << std::hex << ckpt.config_hash << std::dec << "\n";
    std::cout << "model: layers=" << ckpt.layers_text << "\n";
    std::cout << "       codewords=" << ckpt.codewords << " kernel=" << ckpt.kernel
              << " placement=" << ckpt.placement << " split=" << ckpt.tnbof_split << "\n";
    std::cout << "       input " << ckpt.input_dim << "x"
              << (ckpt.input_len > 0 ? std::to_string(ckpt.input_len) : std::string("var"))
              << " -> " << ckpt.classes << " classes\n";
    std::cout << "parameters (" << ckpt.params.size() << "):\n";
    for (const auto& [name, sv] : ckpt.params) {
        double sq = 0.0;
        for (double v : sv.second) sq += v * v;
        std::cout << "  " << name;
        for (size_t i = name.size(); i < 28; ++i) std::cout << ' ';
        std::cout << nbof::shape_str(sv.first) << "  l2=" << std::sqrt(sq) << "\n";
        if (name.size() >= 4 && name.substr(name.size() - 4) == ".tau") {
            std::cout << "    tau value: " << sv.second[0] << "\n";
        }
    }
    if (!ckpt.bn.empty()) {
        std::cout << "batch-norm running stats for " << ckpt.bn.size() << " layer(s)\n";
    }
    std::cout << "adam steps taken: " << ckpt.adam_t << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"neural bag-of-features sequence classification toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags remain valid after a subcommand name
    GlobalFlags flags;
    app.add_flag("--quiet", flags.quiet, "suppress progress output");
    app.add_option("--out-dir", flags.out_dir, "override the output directory");
    auto* seed_opt = app.add_option("--seed", flags.seed, "override the run seed");

    std::string config_path, resume_path, ckpt_path, data_path, synth_spec, synth_out, module;
    double tol = 1e-4;
    int seeds = 10;

    auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
    train_cmd->add_option("config", config_path, "train config file")->required();
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("checkpoint", ckpt_path, "model checkpoint")->required();
    eval_cmd->add_option("dataset", data_path, "seqb dataset")->required();

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    grad_cmd->add_option("--module", module, "only fragments whose name contains this substring");
    grad_cmd->add_option("--tol", tol, "relative-error tolerance");
    grad_cmd->add_option("--seeds", seeds, "random draws per fragment");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
    synth_cmd->add_option("spec", synth_spec, "e.g. d=8,n=20,classes=2,per_class=200,seed=7")
        ->required();
    synth_cmd->add_option("-o,--output", synth_out, "output seqb path")->required();

    auto* study_cmd = app.add_subcommand("noise-study", "noise-resilience experiment");
    study_cmd->add_option("config", config_path, "study config file")->required();

    auto* inspect_cmd = app.add_subcommand("inspect", "describe a checkpoint");
    inspect_cmd->add_option("checkpoint", ckpt_path, "model checkpoint")->required();

    try {
        app.parse(argc, argv);
        flags.seed_set = seed_opt->count() > 0;
        if (train_cmd->parsed()) return cmd_train(config_path, resume_path, flags);
        if (eval_cmd->parsed()) return cmd_eval(ckpt_path, data_path, flags);
        if (grad_cmd->parsed()) return cmd_gradcheck(module, tol, seeds, flags);
        if (synth_cmd->parsed()) return cmd_synth(synth_spec, synth_out, flags);
        if (study_cmd->parsed()) return cmd_noise_study(config_path, flags);
        if (inspect_cmd->parsed()) return cmd_inspect(ckpt_path);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints usage or help text
        return code == 0 ? 0 : 1;      // bad flags/subcommands are validation errors
    } catch (const nbof::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const nbof::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const nbof::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 1;
    } catch (const nbof::ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
}
