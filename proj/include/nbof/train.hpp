#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nbof/dataset.hpp"
#include "nbof/metrics.hpp"
#include "nbof/model.hpp"
#include "nbof/optimizer.hpp"

namespace nbof {

/// Flat key=value config file; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path);

uint64_t fnv1a64(const std::string& text);

struct TrainConfig {
    std::string layers_text;
    int codewords = 256;
    Kernel kernel = Kernel::Rbf;
    std::string init = "uniform";  // uniform | kmeans
    std::string placement_text = "none";
    double tnbof_split = 0.5;

    int epochs = 80;
    int batch = 64;
    double lr = 0.001;
    std::string milestones_text;
    Regularizer reg = Regularizer::MaxNorm;
    double weight_decay = 1e-4;
    double max_norm = 4.0;
    uint64_t seed = 1;
    bool use_class_weights = false;

    std::string data_path;
    int folds = 1;
    std::string out_dir = "out";

    static TrainConfig from_file(const std::string& path);
    static TrainConfig from_map(const std::map<std::string, std::string>& kv,
                                const std::string& source);
    /// Every effective key=value in fixed order; hashed into checkpoints.
    std::string canonical_text() const;
    uint64_t hash() const { return fnv1a64(canonical_text()); }
    LrSchedule schedule() const { return parse_milestones(lr, milestones_text); }
};

struct Checkpoint {
    int format = 1;
    uint64_t config_hash = 0;
    int epoch = 0;

    // enough of the model description to rebuild it exactly
    std::string layers_text;
    int codewords = 0;
    std::string kernel;
    double tnbof_split = 0.5;
    std::string placement;
    int input_dim = 0;
    int input_len = 0;
    int classes = 0;
    uint64_t init_seed = 1;

    std::vector<std::pair<std::string, std::pair<Shape, std::vector<double>>>> params;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> bn;  // mean, var
    int64_t adam_t = 0;
    std::map<std::string, Adam::ParamState> adam_state;
    uint64_t train_rng_state = 0;
    std::vector<double> class_weight_values;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds the model a checkpoint describes and loads its parameters and
/// batch-norm state.
Model model_from_checkpoint(const Checkpoint& ckpt);
Checkpoint snapshot(Model& model, const Adam& adam, uint64_t rng_state, int epoch,
                    uint64_t config_hash, const std::vector<double>& class_weights);

struct HistoryRow {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::pair<std::string, double>> taus;
};

struct TrainResult {
    Model model;
    std::vector<HistoryRow> history;
    Metrics val_metrics;
    Checkpoint checkpoint;
};

/// Runs the epoch loop: seeded shuffle, batched forward/backward, ADAM step,
/// constraint application, schedule update. Deterministic given the config
/// seed. Writes history.csv and model.ckpt under cfg.out_dir.
TrainResult train(const TrainConfig& cfg, const Dataset& ds,
                  const Checkpoint* resume = nullptr, bool quiet = true);

/// Eval-mode metrics over the dataset (or an index subset). An empty
/// evaluation set is an error, not zero metrics.
Metrics evaluate(Model& model, const Dataset& ds, const std::vector<size_t>* indices = nullptr);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows,
                       const TrainConfig& cfg);

}  // namespace nbof
