#pragma once

#include <map>
#include <string>
#include <vector>

#include "nbof/train.hpp"

namespace nbof {

/// Noise-resilience experiment: per seed, trains plain and input-attention
/// variants on clean and noise-injected copies of the same synthetic dataset
/// and compares held-out accuracy. The clean and noisy runs of each variant
/// share initialization; the IA block adds no random draws, so the plain and
/// IA variants start from identical shared parameters.
struct NoiseStudyConfig {
    std::string synth_spec = "d=6,n=6,classes=4,per_class=80";
    int noise_bands = 10;
    int seeds = 5;
    uint64_t base_seed = 100;
    bool include_tnbof = false;

    std::string layers_text = "nbof,dense(16),output";
    int codewords = 8;
    Kernel kernel = Kernel::Rbf;
    double tnbof_split = 0.5;
    int epochs = 15;
    int batch = 16;
    double lr = 0.005;
    std::string milestones_text;
    Regularizer reg = Regularizer::MaxNorm;
    int folds = 5;
    std::string out_dir = "out";

    static NoiseStudyConfig from_file(const std::string& path);
    static NoiseStudyConfig from_map(const std::map<std::string, std::string>& kv,
                                     const std::string& source);
};

struct StudyCell {
    std::vector<double> accuracies;  // one per seed
    double mean() const;
    double stddev() const;
};

struct MaskRow {
    uint64_t seed = 0;
    size_t sample = 0;
    double mean_original = 0.0;
    double mean_injected = 0.0;
};

struct NoiseStudyReport {
    std::vector<std::string> model_names;
    std::map<std::string, StudyCell> cells;  // key: "<model>/clean" or "<model>/noisy"
    std::vector<MaskRow> mask_rows;          // per test sample of the noisy IA runs
    double mask_mean_original = 0.0;
    double mask_mean_injected = 0.0;
    std::vector<std::vector<double>> ia_tau_per_epoch;  // [seed][epoch], noisy NBoF-IA runs
    int seeds = 0;

    std::string text() const;
    const StudyCell& cell(const std::string& model, const std::string& data) const;
};

NoiseStudyReport run_noise_study(const NoiseStudyConfig& cfg, bool quiet = true);

/// Writes noise_study.csv, noise_masks.csv, noise_tau.csv and report.txt.
void write_noise_study_files(const NoiseStudyReport& report, const std::string& out_dir);

}  // namespace nbof
