#include "nbof/layers.hpp"

#include <algorithm>
#include <cmath>

namespace nbof {

int conv1d_output_len(int n, int kernel, int stride) {
    (void)kernel;
    return (n + stride - 1) / stride;  // ceil(n / stride) under same-padding
}

Tensor conv1d(const Tensor& x, const Tensor& weights, const Tensor& bias, int stride) {
    if (x.rank() != 2) throw ShapeError("conv1d: input must be C_in x N, got " + shape_str(x.shape()));
    if (weights.rank() != 3) {
        throw ShapeError("conv1d: weights must be C_out x C_in x k, got " + shape_str(weights.shape()));
    }
    const int c_in = x.dim(0);
    const int n = x.dim(1);
    const int c_out = weights.dim(0);
    const int k = weights.dim(2);
    if (weights.dim(1) != c_in) {
        throw ShapeError("conv1d: weight channel dim " + std::to_string(weights.dim(1)) +
                         " does not match input channels " + std::to_string(c_in));
    }
    if (bias.rank() != 1 || bias.dim(0) != c_out) {
        throw ShapeError("conv1d: bias must be a " + std::to_string(c_out) + "-vector");
    }
    if (k > n) {
        throw ShapeError("conv1d: kernel " + std::to_string(k) + " longer than sequence " +
                         std::to_string(n));
    }
    if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");

    const int n_out = conv1d_output_len(n, k, stride);
    const int pad_total = std::max((n_out - 1) * stride + k - n, 0);
    const int pad_left = pad_total / 2;

    const auto& xd = x.data();
    const auto& wd = weights.data();
    const auto& bd = bias.data();
    std::vector<double> out(static_cast<size_t>(c_out) * n_out);
    for (int co = 0; co < c_out; ++co) {
        for (int t = 0; t < n_out; ++t) {
            double acc = bd[co];
            const int start = t * stride - pad_left;
            for (int ci = 0; ci < c_in; ++ci) {
                const size_t wrow = (static_cast<size_t>(co) * c_in + ci) * k;
                const size_t xrow = static_cast<size_t>(ci) * n;
                for (int dk = 0; dk < k; ++dk) {
                    const int p = start + dk;
                    if (p < 0 || p >= n) continue;  // zero padding
                    acc += xd[xrow + p] * wd[wrow + dk];
                }
            }
            out[static_cast<size_t>(co) * n_out + t] = acc;
        }
    }

    auto px = x.impl();
    auto pw = weights.impl();
    auto pb = bias.impl();
    return Tensor::make(
        "conv1d", {c_out, n_out}, std::move(out), {x, weights, bias},
        [px, pw, pb, c_in, c_out, n, n_out, k, stride, pad_left](const std::vector<double>& g) {
            auto* gx = detail::grad_buf(px);
            auto* gw = detail::grad_buf(pw);
            auto* gb = detail::grad_buf(pb);
            const auto& xd = px->data;
            const auto& wd = pw->data;
            for (int co = 0; co < c_out; ++co) {
                for (int t = 0; t < n_out; ++t) {
                    const double gv = g[static_cast<size_t>(co) * n_out + t];
                    if (gv == 0.0) continue;
                    if (gb) (*gb)[co] += gv;
                    const int start = t * stride - pad_left;
                    for (int ci = 0; ci < c_in; ++ci) {
                        const size_t wrow = (static_cast<size_t>(co) * c_in + ci) * k;
                        const size_t xrow = static_cast<size_t>(ci) * n;
                        for (int dk = 0; dk < k; ++dk) {
                            const int p = start + dk;
                            if (p < 0 || p >= n) continue;
                            if (gx) (*gx)[xrow + p] += gv * wd[wrow + dk];
                            if (gw) (*gw)[wrow + dk] += gv * xd[xrow + p];
                        }
                    }
                }
            }
        });
}

namespace {

struct BnDims {
    int batch;
    int channels;
    int time;
};

BnDims bn_dims(const Tensor& x) {
    if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2)};
    if (x.rank() == 2) return {1, x.dim(0), x.dim(1)};
    throw ShapeError("batchnorm: input must be BxCxN or CxN, got " + shape_str(x.shape()));
}

void check_bn_params(const Tensor& gamma, const Tensor& beta, int channels) {
    if (gamma.rank() != 1 || gamma.dim(0) != channels || beta.rank() != 1 || beta.dim(0) != channels) {
        throw ShapeError("batchnorm: gamma/beta must be " + std::to_string(channels) + "-vectors");
    }
}

// flat index of (b, c, t) in a BxCxN block
inline size_t bn_idx(const BnDims& d, int b, int c, int t) {
    return (static_cast<size_t>(b) * d.channels + c) * d.time + t;
}

}  // namespace

Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       BatchNormState& state, double eps, double momentum) {
    const BnDims dims = bn_dims(x);
    check_bn_params(gamma, beta, dims.channels);
    if (static_cast<int>(state.running_mean.size()) != dims.channels) {
        throw ShapeError("batchnorm: state sized for " + std::to_string(state.running_mean.size()) +
                         " channels, input has " + std::to_string(dims.channels));
    }
    const int m = dims.batch * dims.time;  // normalization population per channel
    if (m < 2) throw ContractError("batchnorm: train mode needs batch*time >= 2 per channel");

    const auto& xd = x.data();
    std::vector<double> mean(dims.channels, 0.0);
    std::vector<double> var(dims.channels, 0.0);
    for (int c = 0; c < dims.channels; ++c) {
        double s = 0.0;
        for (int b = 0; b < dims.batch; ++b)
            for (int t = 0; t < dims.time; ++t) s += xd[bn_idx(dims, b, c, t)];
        mean[c] = s / m;
        double sq = 0.0;
        for (int b = 0; b < dims.batch; ++b)
            for (int t = 0; t < dims.time; ++t) {
                const double dv = xd[bn_idx(dims, b, c, t)] - mean[c];
                sq += dv * dv;
            }
        var[c] = sq / m;  // biased variance for normalization
    }

    auto invstd = std::make_shared<std::vector<double>>(dims.channels);
    for (int c = 0; c < dims.channels; ++c) (*invstd)[c] = 1.0 / std::sqrt(var[c] + eps);

    auto xhat = std::make_shared<std::vector<double>>(xd.size());
    std::vector<double> out(xd.size());
    const auto& gd = gamma.data();
    const auto& bd = beta.data();
    for (int c = 0; c < dims.channels; ++c) {
        for (int b = 0; b < dims.batch; ++b)
            for (int t = 0; t < dims.time; ++t) {
                const size_t i = bn_idx(dims, b, c, t);
                (*xhat)[i] = (xd[i] - mean[c]) * (*invstd)[c];
                out[i] = gd[c] * (*xhat)[i] + bd[c];
            }
    }

    // running stats carry the unbiased variance
    const double unbias = m > 1 ? static_cast<double>(m) / (m - 1) : 1.0;
    for (int c = 0; c < dims.channels; ++c) {
        state.running_mean[c] = momentum * state.running_mean[c] + (1.0 - momentum) * mean[c];
        state.running_var[c] = momentum * state.running_var[c] + (1.0 - momentum) * var[c] * unbias;
    }

    auto px = x.impl();
    auto pg = gamma.impl();
    auto pb = beta.impl();
    return Tensor::make(
        "batchnorm_train", x.shape(), std::move(out), {x, gamma, beta},
        [px, pg, pb, dims, m, xhat, invstd](const std::vector<double>& g) {
            auto* gx = detail::grad_buf(px);
            auto* gg = detail::grad_buf(pg);
            auto* gb = detail::grad_buf(pb);
            for (int c = 0; c < dims.channels; ++c) {
                double sum_g = 0.0;
                double sum_gx = 0.0;
                for (int b = 0; b < dims.batch; ++b)
                    for (int t = 0; t < dims.time; ++t) {
                        const size_t i = bn_idx(dims, b, c, t);
                        sum_g += g[i];
                        sum_gx += g[i] * (*xhat)[i];
                    }
                if (gg) (*gg)[c] += sum_gx;
                if (gb) (*gb)[c] += sum_g;
                if (gx) {
                    const double gamma_c = pg->data[c];
                    const double k = gamma_c * (*invstd)[c];
                    const double mg = sum_g / m;
                    const double mgx = sum_gx / m;
                    for (int b = 0; b < dims.batch; ++b)
                        for (int t = 0; t < dims.time; ++t) {
                            const size_t i = bn_idx(dims, b, c, t);
                            (*gx)[i] += k * (g[i] - mg - (*xhat)[i] * mgx);
                        }
                }
            }
        });
}

Tensor batchnorm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const BatchNormState& state, double eps) {
    const BnDims dims = bn_dims(x);
    check_bn_params(gamma, beta, dims.channels);
    if (static_cast<int>(state.running_mean.size()) != dims.channels) {
        throw ShapeError("batchnorm: state/channel mismatch");
    }
    const auto& xd = x.data();
    const auto& gd = gamma.data();
    const auto& bd = beta.data();
    auto invstd = std::make_shared<std::vector<double>>(dims.channels);
    for (int c = 0; c < dims.channels; ++c)
        (*invstd)[c] = 1.0 / std::sqrt(state.running_var[c] + eps);
    auto xhat = std::make_shared<std::vector<double>>(xd.size());
    std::vector<double> out(xd.size());
    for (int c = 0; c < dims.channels; ++c) {
        for (int b = 0; b < dims.batch; ++b)
            for (int t = 0; t < dims.time; ++t) {
                const size_t i = bn_idx(dims, b, c, t);
                (*xhat)[i] = (xd[i] - state.running_mean[c]) * (*invstd)[c];
                out[i] = gd[c] * (*xhat)[i] + bd[c];
            }
    }
    auto px = x.impl();
    auto pg = gamma.impl();
    auto pb = beta.impl();
    return Tensor::make("batchnorm_eval", x.shape(), std::move(out), {x, gamma, beta},
                        [px, pg, pb, dims, xhat, invstd](const std::vector<double>& g) {
                            auto* gx = detail::grad_buf(px);
                            auto* gg = detail::grad_buf(pg);
                            auto* gb = detail::grad_buf(pb);
                            for (int c = 0; c < dims.channels; ++c) {
                                const double k = pg->data[c] * (*invstd)[c];
                                for (int b = 0; b < dims.batch; ++b)
                                    for (int t = 0; t < dims.time; ++t) {
                                        const size_t i = bn_idx(dims, b, c, t);
                                        if (gx) (*gx)[i] += g[i] * k;
                                        if (gg) (*gg)[c] += g[i] * (*xhat)[i];
                                        if (gb) (*gb)[c] += g[i];
                                    }
                            }
                        });
}

Tensor maxpool1d(const Tensor& x, int window) {
    if (x.rank() != 2) throw ShapeError("maxpool1d: input must be CxN, got " + shape_str(x.shape()));
    if (window < 2) throw ConfigError("maxpool1d: window must be >= 2");
    const int c = x.dim(0);
    const int n = x.dim(1);
    if (n < window) {
        throw ShapeError("maxpool1d: sequence length " + std::to_string(n) +
                         " shorter than window " + std::to_string(window));
    }
    const int n_out = n / window;
    const auto& xd = x.data();
    std::vector<double> out(static_cast<size_t>(c) * n_out);
    auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(c) * n_out);
    for (int ci = 0; ci < c; ++ci) {
        for (int t = 0; t < n_out; ++t) {
            const int start = t * window;
            int best = start;
            double bv = xd[static_cast<size_t>(ci) * n + start];
            for (int j = 1; j < window; ++j) {
                const double v = xd[static_cast<size_t>(ci) * n + start + j];
                if (v > bv) {  // ties keep the first index
                    bv = v;
                    best = start + j;
                }
            }
            out[static_cast<size_t>(ci) * n_out + t] = bv;
            (*argmax)[static_cast<size_t>(ci) * n_out + t] = best;
        }
    }
    auto px = x.impl();
    return Tensor::make("maxpool1d", {c, n_out}, std::move(out), {x},
                        [px, argmax, c, n, n_out](const std::vector<double>& g) {
                            if (auto* gx = detail::grad_buf(px)) {
                                for (int ci = 0; ci < c; ++ci)
                                    for (int t = 0; t < n_out; ++t) {
                                        const size_t o = static_cast<size_t>(ci) * n_out + t;
                                        (*gx)[static_cast<size_t>(ci) * n + (*argmax)[o]] += g[o];
                                    }
                            }
                        });
}

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias, Activation act) {
    if (x.rank() != 1) throw ShapeError("dense: input must be rank-1, got " + shape_str(x.shape()));
    Tensor y = add(matmul(weights, x), bias);
    return act == Activation::Relu ? relu(y) : y;
}

Tensor dropout(const Tensor& x, double rate, bool train, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    }
    if (!train || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.data().size());
    for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    Tensor mask_t(std::make_shared<TensorImpl>());
    mask_t.impl()->shape = x.shape();
    mask_t.impl()->data = std::move(mask);
    return mul(x, mask_t);
}

Tensor weighted_cross_entropy(const Tensor& logits, int label, double weight) {
    if (logits.rank() != 1) {
        throw ShapeError("weighted_cross_entropy: logits must be rank-1, got " +
                         shape_str(logits.shape()));
    }
    const int c = logits.dim(0);
    if (label < 0 || label >= c) {
        throw ContractError("weighted_cross_entropy: label " + std::to_string(label) +
                            " out of range for " + std::to_string(c) + " classes");
    }
    if (weight <= 0.0) throw ContractError("weighted_cross_entropy: class weight must be positive");

    const auto& ld = logits.data();
    double mx = ld[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, ld[i]);
    double sum = 0.0;
    auto softmax = std::make_shared<std::vector<double>>(static_cast<size_t>(c));
    for (int i = 0; i < c; ++i) {
        (*softmax)[i] = std::exp(ld[i] - mx);
        sum += (*softmax)[i];
    }
    for (int i = 0; i < c; ++i) (*softmax)[i] /= sum;
    const double log_z = mx + std::log(sum);
    const double loss = weight * (log_z - ld[label]);

    auto pl = logits.impl();
    return Tensor::make("weighted_ce", {1}, {loss}, {logits},
                        [pl, softmax, label, weight, c](const std::vector<double>& g) {
                            if (auto* gl = detail::grad_buf(pl)) {
                                for (int i = 0; i < c; ++i) {
                                    const double onehot = i == label ? 1.0 : 0.0;
                                    (*gl)[i] += g[0] * weight * ((*softmax)[i] - onehot);
                                }
                            }
                        });
}

}  // namespace nbof
