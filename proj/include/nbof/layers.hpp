#pragma once

#include <vector>

#include "nbof/rng.hpp"
#include "nbof/tensor.hpp"

namespace nbof {

/// 1D cross-correlation over a C_in x N sequence with "same" zero padding:
/// the output length is ceil(N / stride). Weights are C_out x C_in x k.
Tensor conv1d(const Tensor& x, const Tensor& weights, const Tensor& bias, int stride);
int conv1d_output_len(int n, int kernel, int stride);

/// Running statistics owned by a batch-norm layer; updated on train-mode
/// forwards, read on eval-mode forwards.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;

    explicit BatchNormState(int channels)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
    BatchNormState() = default;
};

/// Train-mode batch norm over a BxCxN stack (or a single CxN sample):
/// per-channel statistics over batch and time, eps = 1e-5. Updates `state`
/// with momentum 0.9.
Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       BatchNormState& state, double eps = 1e-5, double momentum = 0.9);

/// Eval-mode batch norm: per-channel affine transform from running stats.
Tensor batchnorm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const BatchNormState& state, double eps = 1e-5);

/// Non-overlapping window max over time, CxN -> Cxfloor(N/window). Gradient
/// routes to the first maximal index of each window.
Tensor maxpool1d(const Tensor& x, int window = 2);

enum class Activation { None, Relu };

/// W x + b with optional ReLU on a rank-1 input.
Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias, Activation act);

/// Inverted dropout: train mode zeroes entries with probability `rate` and
/// scales survivors by 1/(1-rate); eval mode is the identity.
Tensor dropout(const Tensor& x, double rate, bool train, Rng& rng);

/// -weight * log softmax(logits)[label], computed with max-shifted log-sum-exp.
Tensor weighted_cross_entropy(const Tensor& logits, int label, double weight);

}  // namespace nbof
