#pragma once

#include <vector>

#include "nbof/rng.hpp"
#include "nbof/tensor.hpp"

namespace nbof {

enum class Kernel { Rbf, Hyperbolic };

Kernel kernel_from_string(const std::string& name);
const char* kernel_name(Kernel k);

/// Learnable codebook of K prototype vectors over D-dimensional features.
/// Gaussian widths are stored as log-values so the effective widths
/// exp(log_w) stay strictly positive under unconstrained optimization.
struct Codebook {
    Tensor codewords;   // KxD
    Tensor log_widths;  // KxD, rbf kernel only
    Tensor bias;        // K, hyperbolic kernel only
    Kernel kernel = Kernel::Rbf;
    int num_codewords = 0;
    int feature_dim = 0;

    static Codebook create(Kernel kernel, int num_codewords, int feature_dim, Rng& rng);
    std::vector<NamedParam> parameters(const std::string& prefix) const;
};

/// Soft RBF quantization: column n of the result is the softmax over
/// codewords of -||(x_n - v_k) (.) w_k||_2. Every column sums to 1.
Tensor rbf_quantize(const Tensor& x, const Codebook& cb);

/// Logistic quantization: tanh(V x_n + b) per column, then softmax over
/// codewords. Every column sums to 1.
Tensor hyperbolic_quantize(const Tensor& x, const Codebook& cb);

/// Dispatch on the codebook's kernel.
Tensor quantize(const Tensor& x, const Codebook& cb);

/// Mean of the quantized columns: the histogram representation.
Tensor accumulate_histogram(const Tensor& phi);

/// Dual-codebook forward: long-term histogram over the full sequence,
/// short-term over the most recent ceil(split*N) columns, concatenated
/// [long; short].
Tensor tnbof_forward(const Tensor& x, const Codebook& long_cb, const Codebook& short_cb,
                     double split);

/// Number of trailing columns the short-term codebook sees.
int tnbof_short_window(int seq_len, double split);

/// Lloyd iterations over a sample of feature columns; used for the optional
/// k-means codeword initialization. Returns K centers as a KxD tensor.
std::vector<double> kmeans_centers(const std::vector<std::vector<double>>& columns, int k, int dim,
                                   int iterations, Rng& rng);

}  // namespace nbof
