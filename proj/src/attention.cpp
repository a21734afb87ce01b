#include "nbof/attention.hpp"

namespace nbof {

AttentionBlock AttentionBlock::create(int n_attend) {
    if (n_attend < 1) throw ConfigError("attention block needs n_attend >= 1");
    AttentionBlock block;
    block.n_attend = n_attend;
    block.off_diag = Tensor::zeros({n_attend, n_attend});
    block.off_diag.set_requires_grad(true);
    block.tau = Tensor::full({1}, 0.5);
    block.tau.set_requires_grad(true);
    return block;
}

std::vector<NamedParam> AttentionBlock::parameters(const std::string& prefix) const {
    return {{prefix + ".W_off", off_diag}, {prefix + ".tau", tau}};
}

Tensor effective_weight(const AttentionBlock& block) {
    const int n = block.n_attend;
    std::vector<double> out = block.off_diag.data();
    const double pin = 1.0 / n;
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i) * n + i] = pin;
    auto pw = block.off_diag.impl();
    return Tensor::make("pin_diagonal", {n, n}, std::move(out), {block.off_diag},
                        [pw, n](const std::vector<double>& g) {
                            if (auto* gw = detail::grad_buf(pw)) {
                                for (int i = 0; i < n; ++i)
                                    for (int j = 0; j < n; ++j)
                                        if (i != j)
                                            (*gw)[static_cast<size_t>(i) * n + j] +=
                                                g[static_cast<size_t>(i) * n + j];
                            }
                        });
}

namespace {

void check_attended_dim(const Tensor& s, const AttentionBlock& block, const char* op) {
    if (s.rank() != 2 || s.dim(1) != block.n_attend) {
        throw ShapeError(std::string(op) + ": block attends over " + std::to_string(block.n_attend) +
                         " columns but input is " + shape_str(s.shape()));
    }
}

}  // namespace

Tensor attention_mask(const Tensor& s, const AttentionBlock& block) {
    check_attended_dim(s, block, "attention_mask");
    return row_softmax(matmul(s, effective_weight(block)));
}

Tensor apply_2da(const Tensor& s, const AttentionBlock& block, Tensor* mask_out) {
    check_attended_dim(s, block, "apply_2da");
    Tensor mask = attention_mask(s, block);
    if (mask_out) *mask_out = mask;
    Tensor one = Tensor::full({1}, 1.0);
    return add(scale(block.tau, mul(s, mask)), scale(sub(one, block.tau), s));
}

Tensor apply_2da(const Tensor& s, const AttentionBlock& block) {
    return apply_2da(s, block, nullptr);
}

Tensor codeword_attention(const Tensor& phi, const AttentionBlock& block) {
    if (phi.rank() != 2 || phi.dim(0) != block.n_attend) {
        throw ShapeError("codeword_attention: block built for K=" + std::to_string(block.n_attend) +
                         " codeword rows but input is " + shape_str(phi.shape()));
    }
    return transpose(apply_2da(transpose(phi), block));
}

Tensor temporal_attention(const Tensor& phi, const AttentionBlock& block) {
    if (phi.rank() != 2 || phi.dim(1) != block.n_attend) {
        throw ShapeError("temporal_attention: block built for N=" + std::to_string(block.n_attend) +
                         " time steps but input is " + shape_str(phi.shape()) +
                         " (temporal attention requires fixed-length sequences)");
    }
    return apply_2da(phi, block);
}

Tensor input_attention(const Tensor& x, const AttentionBlock& block, Tensor* mask_out) {
    if (x.rank() != 2 || x.dim(0) != block.n_attend) {
        throw ShapeError("input_attention: block built for D=" + std::to_string(block.n_attend) +
                         " series but input is " + shape_str(x.shape()));
    }
    return transpose(apply_2da(transpose(x), block, mask_out));
}

Tensor input_attention(const Tensor& x, const AttentionBlock& block) {
    return input_attention(x, block, nullptr);
}

}  // namespace nbof
