#pragma once

#include <vector>

#include "nbof/tensor.hpp"

namespace nbof {

/// 2D-Attention block over a fixed attended dimension N. The effective weight
/// matrix is the stored off-diagonal matrix with every diagonal entry pinned
/// to 1/N; the diagonal storage is written by the optimizer but never read,
/// so the pin survives any number of update steps. The mixing scalar tau is
/// unconstrained and starts at 0.5.
struct AttentionBlock {
    Tensor off_diag;  // NxN learnable entries, diagonal storage unused
    Tensor tau;       // [1]
    int n_attend = 0;

    static AttentionBlock create(int n_attend);
    std::vector<NamedParam> parameters(const std::string& prefix) const;
    double tau_value() const { return tau.data()[0]; }
};

/// Effective weight matrix: off_diag with the diagonal rebuilt as 1/N.
/// Gradients flow to the off-diagonal entries only.
Tensor effective_weight(const AttentionBlock& block);

/// A = rowsoftmax(S * W_eff). Entries lie in [0,1]; rows sum to 1.
Tensor attention_mask(const Tensor& s, const AttentionBlock& block);

/// S~ = tau (S (.) A) + (1 - tau) S. Identity at tau = 0.
Tensor apply_2da(const Tensor& s, const AttentionBlock& block);
Tensor apply_2da(const Tensor& s, const AttentionBlock& block, Tensor* mask_out);

/// Attention over the codeword axis of KxN quantized features (block built
/// for K). Transposes in and out so the result stays KxN.
Tensor codeword_attention(const Tensor& phi, const AttentionBlock& block);

/// Attention over the time axis of KxN quantized features (block built for
/// N); turns the downstream mean into a weighted average.
Tensor temporal_attention(const Tensor& phi, const AttentionBlock& block);

/// Attention over the series axis of a DxN input (block built for D); used to
/// suppress noisy series before quantization. Optionally exposes the NxD mask
/// for inspection.
Tensor input_attention(const Tensor& x, const AttentionBlock& block);
Tensor input_attention(const Tensor& x, const AttentionBlock& block, Tensor* mask_out);

}  // namespace nbof
