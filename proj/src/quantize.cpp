#include "nbof/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nbof {

Kernel kernel_from_string(const std::string& name) {
    if (name == "rbf") return Kernel::Rbf;
    if (name == "hyperbolic") return Kernel::Hyperbolic;
    throw ConfigError("unknown quantization kernel '" + name + "' (expected rbf or hyperbolic)");
}

const char* kernel_name(Kernel k) { return k == Kernel::Rbf ? "rbf" : "hyperbolic"; }

Codebook Codebook::create(Kernel kernel, int num_codewords, int feature_dim, Rng& rng) {
    if (num_codewords < 1 || feature_dim < 1) {
        throw ConfigError("codebook needs K >= 1 and D >= 1");
    }
    Codebook cb;
    cb.kernel = kernel;
    cb.num_codewords = num_codewords;
    cb.feature_dim = feature_dim;
    const double a = std::sqrt(6.0 / (num_codewords + feature_dim));
    cb.codewords = Tensor::uniform({num_codewords, feature_dim}, -a, a, rng);
    cb.codewords.set_requires_grad(true);
    if (kernel == Kernel::Rbf) {
        cb.log_widths = Tensor::zeros({num_codewords, feature_dim});  // widths start at 1
        cb.log_widths.set_requires_grad(true);
    } else {
        cb.bias = Tensor::zeros({num_codewords});
        cb.bias.set_requires_grad(true);
    }
    return cb;
}

std::vector<NamedParam> Codebook::parameters(const std::string& prefix) const {
    std::vector<NamedParam> out;
    out.push_back({prefix + ".V", codewords});
    if (kernel == Kernel::Rbf) {
        out.push_back({prefix + ".logW", log_widths});
    } else {
        out.push_back({prefix + ".bias", bias});
    }
    return out;
}

Tensor rbf_quantize(const Tensor& x, const Codebook& cb) {
    if (cb.kernel != Kernel::Rbf) throw ContractError("rbf_quantize: codebook kernel is not rbf");
    if (x.rank() != 2 || x.dim(0) != cb.feature_dim) {
        throw ShapeError("rbf_quantize: input must be " + std::to_string(cb.feature_dim) +
                         "xN, got " + shape_str(x.shape()));
    }
    const int d = cb.feature_dim;
    const int n = x.dim(1);
    const int k = cb.num_codewords;

    const auto& xd = x.data();
    const auto& vd = cb.codewords.data();
    const auto& lw = cb.log_widths.data();

    std::vector<double> widths(lw.size());
    for (size_t i = 0; i < lw.size(); ++i) widths[i] = std::exp(lw[i]);

    // dist[ki][ni] = ||(x_n - v_k) (.) w_k||_2; phi columns are the softmax of
    // the negated distances over k. Distances are recomputed in backward, so
    // only the KxN buffers are saved.
    auto dist = std::make_shared<std::vector<double>>(static_cast<size_t>(k) * n);
    std::vector<double> phi(static_cast<size_t>(k) * n);
    for (int ni = 0; ni < n; ++ni) {
        for (int ki = 0; ki < k; ++ki) {
            double acc = 0.0;
            for (int di = 0; di < d; ++di) {
                const double diff =
                    (xd[static_cast<size_t>(di) * n + ni] - vd[static_cast<size_t>(ki) * d + di]) *
                    widths[static_cast<size_t>(ki) * d + di];
                acc += diff * diff;
            }
            (*dist)[static_cast<size_t>(ki) * n + ni] = std::sqrt(acc);
        }
        // column softmax of -dist with max-shift (distances >= 0, so the
        // stabilizer is the smallest distance)
        double mn = std::numeric_limits<double>::infinity();
        for (int ki = 0; ki < k; ++ki) mn = std::min(mn, (*dist)[static_cast<size_t>(ki) * n + ni]);
        double sum = 0.0;
        for (int ki = 0; ki < k; ++ki) {
            const double e = std::exp(mn - (*dist)[static_cast<size_t>(ki) * n + ni]);
            phi[static_cast<size_t>(ki) * n + ni] = e;
            sum += e;
        }
        for (int ki = 0; ki < k; ++ki) phi[static_cast<size_t>(ki) * n + ni] /= sum;
    }

    auto px = x.impl();
    auto pv = cb.codewords.impl();
    auto plw = cb.log_widths.impl();
    auto saved_phi = std::make_shared<std::vector<double>>(phi);
    auto saved_w = std::make_shared<std::vector<double>>(std::move(widths));

    return Tensor::make(
        "rbf_quantize", {k, n}, std::move(phi), {x, cb.codewords, cb.log_widths},
        [px, pv, plw, saved_phi, saved_w, dist, d, n, k](const std::vector<double>& g) {
            auto* gx = detail::grad_buf(px);
            auto* gv = detail::grad_buf(pv);
            auto* glw = detail::grad_buf(plw);
            const auto& xd = px->data;
            const auto& vd = pv->data;
            const auto& w = *saved_w;
            const auto& y = *saved_phi;
            for (int ni = 0; ni < n; ++ni) {
                // softmax backward on logits e = -dist: dE_k = y_k (g_k - dot)
                double dot = 0.0;
                for (int ki = 0; ki < k; ++ki)
                    dot += g[static_cast<size_t>(ki) * n + ni] * y[static_cast<size_t>(ki) * n + ni];
                for (int ki = 0; ki < k; ++ki) {
                    const size_t kn = static_cast<size_t>(ki) * n + ni;
                    const double ddist = -(y[kn] * (g[kn] - dot));
                    if (ddist == 0.0) continue;
                    const double denom = std::max((*dist)[kn], 1e-12);
                    const double scale = ddist / denom;
                    for (int di = 0; di < d; ++di) {
                        const size_t kd = static_cast<size_t>(ki) * d + di;
                        const double diff = xd[static_cast<size_t>(di) * n + ni] - vd[kd];
                        const double w2 = w[kd] * w[kd];
                        // d dist / dx = diff * w^2 / dist
                        if (gx) (*gx)[static_cast<size_t>(di) * n + ni] += scale * diff * w2;
                        if (gv) (*gv)[kd] -= scale * diff * w2;
                        // d dist / d log w = diff^2 * w^2 / dist (chain through exp)
                        if (glw) (*glw)[kd] += scale * diff * diff * w2;
                    }
                }
            }
        });
}

Tensor hyperbolic_quantize(const Tensor& x, const Codebook& cb) {
    if (cb.kernel != Kernel::Hyperbolic) {
        throw ContractError("hyperbolic_quantize: codebook kernel is not hyperbolic");
    }
    if (x.rank() != 2 || x.dim(0) != cb.feature_dim) {
        throw ShapeError("hyperbolic_quantize: input must be " + std::to_string(cb.feature_dim) +
                         "xN, got " + shape_str(x.shape()));
    }
    // u = tanh(V x + b), then softmax over codewords per column.
    Tensor u = tanh_of(add_col_bias(matmul(cb.codewords, x), cb.bias));
    return transpose(row_softmax(transpose(u)));
}

Tensor quantize(const Tensor& x, const Codebook& cb) {
    return cb.kernel == Kernel::Rbf ? rbf_quantize(x, cb) : hyperbolic_quantize(x, cb);
}

Tensor accumulate_histogram(const Tensor& phi) {
    if (phi.rank() != 2) {
        throw ContractError("accumulate_histogram: quantized features must be KxN, got " +
                            shape_str(phi.shape()));
    }
    return reduce_mean_axis(phi, 1);
}

int tnbof_short_window(int seq_len, double split) {
    if (split <= 0.0 || split > 1.0) {
        throw ContractError("tnbof: split fraction must be in (0, 1], got " + std::to_string(split));
    }
    const int w = static_cast<int>(std::ceil(split * seq_len));
    if (w < 1) throw ContractError("tnbof: short-term window is empty");
    return std::min(w, seq_len);
}

Tensor tnbof_forward(const Tensor& x, const Codebook& long_cb, const Codebook& short_cb,
                     double split) {
    if (long_cb.feature_dim != short_cb.feature_dim) {
        throw ShapeError("tnbof: codebooks disagree on feature dim");
    }
    const int n = x.dim(1);
    const int w = tnbof_short_window(n, split);
    Tensor long_hist = accumulate_histogram(quantize(x, long_cb));
    Tensor short_hist = accumulate_histogram(quantize(slice_cols(x, n - w, n), short_cb));
    return concat(long_hist, short_hist);
}

std::vector<double> kmeans_centers(const std::vector<std::vector<double>>& columns, int k, int dim,
                                   int iterations, Rng& rng) {
    if (columns.empty()) throw ContractError("kmeans: no feature columns supplied");
    if (static_cast<int>(columns.size()) < k) {
        throw ContractError("kmeans: fewer columns than centers");
    }
    std::vector<double> centers(static_cast<size_t>(k) * dim);
    // start from k distinct random columns
    std::vector<uint32_t> pick(columns.size());
    for (uint32_t i = 0; i < pick.size(); ++i) pick[i] = i;
    for (size_t i = pick.size(); i > 1; --i) std::swap(pick[i - 1], pick[rng.below(static_cast<uint32_t>(i))]);
    for (int c = 0; c < k; ++c)
        std::copy(columns[pick[c]].begin(), columns[pick[c]].end(), centers.begin() + static_cast<size_t>(c) * dim);

    std::vector<int> assign(columns.size(), 0);
    for (int it = 0; it < iterations; ++it) {
        bool moved = false;
        for (size_t i = 0; i < columns.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            int bc = 0;
            for (int c = 0; c < k; ++c) {
                double acc = 0.0;
                for (int d = 0; d < dim; ++d) {
                    const double diff = columns[i][d] - centers[static_cast<size_t>(c) * dim + d];
                    acc += diff * diff;
                }
                if (acc < best) {
                    best = acc;
                    bc = c;
                }
            }
            if (assign[i] != bc) moved = true;
            assign[i] = bc;
        }
        std::vector<double> sums(static_cast<size_t>(k) * dim, 0.0);
        std::vector<int> counts(k, 0);
        for (size_t i = 0; i < columns.size(); ++i) {
            counts[assign[i]]++;
            for (int d = 0; d < dim; ++d) sums[static_cast<size_t>(assign[i]) * dim + d] += columns[i][d];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its center
            for (int d = 0; d < dim; ++d)
                centers[static_cast<size_t>(c) * dim + d] = sums[static_cast<size_t>(c) * dim + d] / counts[c];
        }
        if (!moved) break;
    }
    return centers;
}

}  // namespace nbof
