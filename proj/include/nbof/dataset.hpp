#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbof/rng.hpp"
#include "nbof/tensor.hpp"

namespace nbof {

/// Collection of DxN feature matrices with integer labels. Sample storage is
/// float32 (the on-disk precision), row-major; training converts to float64
/// tensors on the fly. Sequence lengths may vary unless a temporal-attention
/// block is configured downstream.
struct Dataset {
    int feature_dim = 0;
    int class_count = 0;
    std::vector<std::vector<float>> samples;  // row-major feature_dim x seq_len[i]
    std::vector<int> seq_len;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::string provenance;

    size_t size() const { return samples.size(); }
    bool fixed_length() const;
    int fixed_len() const;  // -1 when lengths vary
    Tensor sample_tensor(size_t i) const;
    std::vector<int64_t> class_counts() const;
    void validate() const;
};

/// seqb container, bit-exact layout:
///   magic "SQB1" | version u16 LE = 1 | sample_count u32 | D u32 |
///   flags u8 (bit0: fixed N) | [N u32 when fixed] | class_count u16 |
///   per sample: [N u32 when variable] label u32, D*N float32 LE row-major |
///   footer: CRC32 (IEEE) of every byte before the footer.
Dataset load_seqb(const std::string& path);
void write_seqb(const Dataset& ds, const std::string& path);

uint32_t crc32_ieee(const uint8_t* data, size_t len);

/// Windows a DxT series into overlapping DxN samples; each window takes the
/// label of its final step.
Dataset sliding_windows(const std::vector<float>& series, int feature_dim, int total_steps,
                        int window, int stride, const std::vector<int>& step_labels,
                        int class_count);

/// Seeded synthetic benchmark: class c draws sequence columns from a
/// two-component Gaussian mixture (sigma = 1). Component means are separated
/// by at least 4 sigma across classes and sum to zero over the feature axis,
/// so the per-step feature average carries no class signal.
Dataset synth_clusters(int feature_dim, int seq_len, int classes, int samples_per_class,
                       uint64_t seed);

/// Appends `count` synthetic rows per sample: the mean-over-features row plus
/// white noise scaled by that row's empirical standard deviation. Original
/// rows are untouched.
Dataset inject_noise_bands(const Dataset& ds, int count, uint64_t seed);

struct FoldSplit {
    std::vector<size_t> train;
    std::vector<size_t> test;
};

/// Stratified k-fold partition: per-class fold sizes differ by at most one
/// sample; test folds are disjoint and cover the dataset.
std::vector<FoldSplit> kfold_split(const Dataset& ds, int k, uint64_t seed);

/// Inline generator spec, e.g. "d=8,n=20,classes=2,per_class=200,seed=7".
/// Optional key noise=<count> appends that many noise bands.
Dataset synth_from_spec(const std::string& spec);

}  // namespace nbof
