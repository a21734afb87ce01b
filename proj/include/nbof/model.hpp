#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nbof/attention.hpp"
#include "nbof/layers.hpp"
#include "nbof/quantize.hpp"
#include "nbof/tensor.hpp"

namespace nbof {

enum class LayerKind { Conv, BatchNorm, Relu, MaxPool, NBoF, TNBoF, Dense, Dropout, Output };

struct LayerSpec {
    LayerKind kind;
    int filters = 0;
    int kernel = 0;
    int stride = 1;
    int window = 2;
    int units = 0;
    Activation activation = Activation::Relu;
    double rate = 0.0;
};

std::vector<LayerSpec> parse_layer_string(const std::string& text);
std::string layer_string(const std::vector<LayerSpec>& layers);

/// Which attention placements the quantization stage carries. At most one of
/// each; they attend over different axes (codewords, time, input series).
struct Placement {
    bool ca = false;
    bool ta = false;
    bool ia = false;
};

Placement placement_from_string(const std::string& text);
std::string placement_string(const Placement& p);

struct ModelConfig {
    std::vector<LayerSpec> layers;
    int codewords = 256;
    Kernel kernel = Kernel::Rbf;
    double tnbof_split = 0.5;
    Placement placement;
    int input_dim = 0;
    int input_len = 0;  // 0 = variable-length sequences
    int classes = 0;
    uint64_t init_seed = 1;
};

struct TraceEntry {
    std::string stage;
    int rows = 0;
    int cols = 0;  // 0 = vector stage, -1 = variable length
};

struct ModelLayer {
    LayerSpec spec;
    Tensor conv_w, conv_b;
    Tensor gamma, beta;
    BatchNormState bn_state;
    Tensor dense_w, dense_b;
    Codebook cb, cb_short;
    std::optional<AttentionBlock> ia, ca, ta, ta_short;
};

struct ForwardOptions {
    bool train = false;
    Rng* rng = nullptr;  // dropout masks; required when train and a dropout layer exists
    std::vector<Tensor>* ia_masks = nullptr;  // per-sample NxD input-attention masks
};

/// Assembled pipeline. Parameters are created in layer order from the config
/// seed; attention blocks take no random draws, so adding a placement never
/// shifts the initialization of the shared layers.
class Model {
  public:
    ModelConfig cfg;
    std::vector<ModelLayer> layers;
    std::vector<TraceEntry> trace;

    /// Per-sample logits, one rank-1 tensor per input.
    std::vector<Tensor> forward(const std::vector<Tensor>& inputs, const ForwardOptions& opt);
    Tensor forward_one(const Tensor& input, const ForwardOptions& opt);

    /// Eval-mode prediction (no graph, running batch-norm stats).
    int predict(const Tensor& input);

    std::vector<NamedParam> parameters();
    std::vector<NamedParam> max_norm_targets();
    std::vector<std::pair<std::string, BatchNormState*>> bn_states();
    std::vector<std::pair<std::string, const AttentionBlock*>> attention_blocks() const;

    /// Re-initializes codebooks from Lloyd centers over the quantization-stage
    /// features of the probe inputs.
    void kmeans_init(const std::vector<Tensor>& probe_inputs, int max_columns, Rng& rng);

    int quantize_stage() const;  // layer index of the NBoF/TNBoF stage
};

/// Validates the config chain, traces shapes end to end, creates parameters.
/// Shape-incompatible chains fail with the offending stage named.
Model build_model(const ModelConfig& cfg);

std::string trace_string(const std::vector<TraceEntry>& trace);

}  // namespace nbof
