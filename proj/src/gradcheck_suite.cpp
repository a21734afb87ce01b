#include <cmath>

#include "nbof/attention.hpp"
#include "nbof/gradcheck.hpp"
#include "nbof/layers.hpp"
#include "nbof/model.hpp"
#include "nbof/quantize.hpp"

namespace nbof {

namespace {

Tensor grad_leaf(const Shape& shape, double lo, double hi, Rng& rng) {
    Tensor t = Tensor::uniform(shape, lo, hi, rng);
    t.set_requires_grad(true);
    return t;
}

/// Fixed random projection so sums over matrix outputs have non-degenerate
/// per-entry gradients.
Tensor projection(const Shape& shape, Rng& rng) { return Tensor::uniform(shape, -1.0, 1.0, rng); }

GradReport check_matmul(Rng& rng, double h, double tol) {
    Tensor a = grad_leaf({3, 4}, -1.0, 1.0, rng);
    Tensor b = grad_leaf({4, 2}, -1.0, 1.0, rng);
    Tensor r = projection({3, 2}, rng);
    auto loss = [a, b, r]() { return sum_all(mul(matmul(a, b), r)); };
    return finite_difference_gradcheck(loss, {{"A", a}, {"B", b}}, h, tol);
}

GradReport check_row_softmax(Rng& rng, double h, double tol) {
    Tensor a = grad_leaf({3, 5}, -2.0, 2.0, rng);
    Tensor r = projection({3, 5}, rng);
    auto loss = [a, r]() { return sum_all(mul(row_softmax(a), r)); };
    return finite_difference_gradcheck(loss, {{"A", a}}, h, tol);
}

GradReport check_reduce_mean(Rng& rng, double h, double tol) {
    Tensor a = grad_leaf({4, 3}, -1.0, 1.0, rng);
    Tensor r0 = projection({3}, rng);
    Tensor r1 = projection({4}, rng);
    auto loss = [a, r0, r1]() {
        return add(sum_all(mul(reduce_mean_axis(a, 0), r0)),
                   sum_all(mul(reduce_mean_axis(a, 1), r1)));
    };
    return finite_difference_gradcheck(loss, {{"A", a}}, h, tol);
}

GradReport check_rbf_quantize(Rng& rng, double h, double tol) {
    const int d = 3, n = 5, k = 4;
    Codebook cb = Codebook::create(Kernel::Rbf, k, d, rng);
    cb.log_widths.leaf_data() = Tensor::uniform({k, d}, -0.3, 0.3, rng).data();
    Tensor x = grad_leaf({d, n}, -1.0, 1.0, rng);
    Tensor r = projection({k, n}, rng);
    auto loss = [x, cb, r]() { return sum_all(mul(rbf_quantize(x, cb), r)); };
    return finite_difference_gradcheck(
        loss, {{"X", x}, {"V", cb.codewords}, {"logW", cb.log_widths}}, h, tol);
}

GradReport check_hyperbolic_quantize(Rng& rng, double h, double tol) {
    const int d = 3, n = 4, k = 4;
    Codebook cb = Codebook::create(Kernel::Hyperbolic, k, d, rng);
    cb.bias.leaf_data() = Tensor::uniform({k}, -0.5, 0.5, rng).data();
    Tensor x = grad_leaf({d, n}, -1.0, 1.0, rng);
    Tensor r = projection({k, n}, rng);
    auto loss = [x, cb, r]() { return sum_all(mul(hyperbolic_quantize(x, cb), r)); };
    return finite_difference_gradcheck(loss, {{"X", x}, {"V", cb.codewords}, {"bias", cb.bias}}, h,
                                       tol);
}

GradReport check_accumulate(Rng& rng, double h, double tol) {
    Tensor phi = grad_leaf({4, 6}, 0.0, 1.0, rng);
    Tensor r = projection({4}, rng);
    auto loss = [phi, r]() { return sum_all(mul(accumulate_histogram(phi), r)); };
    return finite_difference_gradcheck(loss, {{"Phi", phi}}, h, tol);
}

GradReport check_2da_block(Rng& rng, double h, double tol) {
    const int m = 4, n = 5;
    AttentionBlock block = AttentionBlock::create(n);
    block.off_diag.leaf_data() = Tensor::uniform({n, n}, -0.5, 0.5, rng).data();
    block.tau.leaf_data()[0] = rng.uniform(0.1, 0.9);
    Tensor s = grad_leaf({m, n}, -1.0, 1.0, rng);
    Tensor r = projection({m, n}, rng);
    auto loss = [s, block, r]() { return sum_all(mul(apply_2da(s, block), r)); };
    return finite_difference_gradcheck(
        loss, {{"S", s}, {"W_off", block.off_diag}, {"tau", block.tau}}, h, tol);
}

GradReport check_codeword_attention(Rng& rng, double h, double tol) {
    const int k = 4, n = 3;
    AttentionBlock block = AttentionBlock::create(k);
    block.off_diag.leaf_data() = Tensor::uniform({k, k}, -0.5, 0.5, rng).data();
    Tensor phi = grad_leaf({k, n}, 0.0, 1.0, rng);
    Tensor r = projection({k, n}, rng);
    auto loss = [phi, block, r]() { return sum_all(mul(codeword_attention(phi, block), r)); };
    return finite_difference_gradcheck(
        loss, {{"Phi", phi}, {"W_off", block.off_diag}, {"tau", block.tau}}, h, tol);
}

GradReport check_temporal_attention(Rng& rng, double h, double tol) {
    const int k = 3, n = 5;
    AttentionBlock block = AttentionBlock::create(n);
    block.off_diag.leaf_data() = Tensor::uniform({n, n}, -0.5, 0.5, rng).data();
    Tensor phi = grad_leaf({k, n}, 0.0, 1.0, rng);
    Tensor r = projection({k, n}, rng);
    auto loss = [phi, block, r]() { return sum_all(mul(temporal_attention(phi, block), r)); };
    return finite_difference_gradcheck(
        loss, {{"Phi", phi}, {"W_off", block.off_diag}, {"tau", block.tau}}, h, tol);
}

GradReport check_input_attention(Rng& rng, double h, double tol) {
    const int d = 4, n = 3;
    AttentionBlock block = AttentionBlock::create(d);
    block.off_diag.leaf_data() = Tensor::uniform({d, d}, -0.5, 0.5, rng).data();
    Tensor x = grad_leaf({d, n}, -1.0, 1.0, rng);
    Tensor r = projection({d, n}, rng);
    auto loss = [x, block, r]() { return sum_all(mul(input_attention(x, block), r)); };
    return finite_difference_gradcheck(
        loss, {{"X", x}, {"W_off", block.off_diag}, {"tau", block.tau}}, h, tol);
}

GradReport check_conv1d(Rng& rng, double h, double tol) {
    const int c_in = 2, n = 7, c_out = 3, k = 3;
    const int stride = rng.below(2) == 0 ? 1 : 2;
    Tensor x = grad_leaf({c_in, n}, -1.0, 1.0, rng);
    Tensor w = grad_leaf({c_out, c_in, k}, -0.7, 0.7, rng);
    Tensor b = grad_leaf({c_out}, -0.2, 0.2, rng);
    Tensor r = projection({c_out, conv1d_output_len(n, k, stride)}, rng);
    auto loss = [x, w, b, r, stride]() { return sum_all(mul(conv1d(x, w, b, stride), r)); };
    return finite_difference_gradcheck(loss, {{"X", x}, {"W", w}, {"b", b}}, h, tol);
}

GradReport check_batchnorm(Rng& rng, double h, double tol) {
    const int batch = 3, c = 2, n = 4;
    std::vector<Tensor> xs;
    std::vector<NamedParam> params;
    for (int i = 0; i < batch; ++i) {
        xs.push_back(grad_leaf({c, n}, -1.5, 1.5, rng));
        params.push_back({"X" + std::to_string(i), xs.back()});
    }
    Tensor gamma = grad_leaf({c}, 0.5, 1.5, rng);
    Tensor beta = grad_leaf({c}, -0.5, 0.5, rng);
    params.push_back({"gamma", gamma});
    params.push_back({"beta", beta});
    Tensor r = projection({batch, c * n}, rng);
    auto state = std::make_shared<BatchNormState>(c);
    auto loss = [xs, gamma, beta, state, r, batch, c, n]() {
        Tensor y = batchnorm_train(stack_batch(xs), gamma, beta, *state);
        // flatten the BxCxN output against the projection via per-batch slices
        Tensor acc;
        for (int i = 0; i < batch; ++i) {
            Tensor row = slice_batch(y, i);
            Tensor flat = sum_all(mul(row, Tensor::from_data({c, n}, std::vector<double>(
                                                r.data().begin() + static_cast<size_t>(i) * c * n,
                                                r.data().begin() + static_cast<size_t>(i + 1) * c * n))));
            acc = i == 0 ? flat : add(acc, flat);
        }
        return acc;
    };
    return finite_difference_gradcheck(loss, params, h, tol);
}

GradReport check_maxpool(Rng& rng, double h, double tol) {
    const int c = 2, n = 6;
    // keep window values separated so the argmax cannot flip under +-h probes
    Tensor x;
    while (true) {
        x = Tensor::uniform({c, n}, -1.0, 1.0, rng);
        bool ok = true;
        for (int ci = 0; ci < c && ok; ++ci) {
            for (int t = 0; t + 1 < n; t += 2) {
                if (std::abs(x.at(ci, t) - x.at(ci, t + 1)) < 1e-2) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) break;
    }
    x.set_requires_grad(true);
    Tensor r = projection({c, n / 2}, rng);
    auto loss = [x, r]() { return sum_all(mul(maxpool1d(x, 2), r)); };
    return finite_difference_gradcheck(loss, {{"X", x}}, h, tol);
}

GradReport check_dense(Rng& rng, double h, double tol) {
    const int in = 5, out = 4;
    Tensor w = grad_leaf({out, in}, -0.8, 0.8, rng);
    Tensor b = grad_leaf({out}, -0.3, 0.3, rng);
    // redraw until every ReLU pre-activation sits away from the kink
    Tensor x;
    while (true) {
        x = Tensor::uniform({in}, -1.0, 1.0, rng);
        bool ok = true;
        NoGradGuard no_grad;
        Tensor pre = add(matmul(w, x), b);
        for (double v : pre.data()) {
            if (std::abs(v) < 1e-2) {
                ok = false;
                break;
            }
        }
        if (ok) break;
    }
    x.set_requires_grad(true);
    Tensor r = projection({out}, rng);
    auto loss = [x, w, b, r]() { return sum_all(mul(dense(x, w, b, Activation::Relu), r)); };
    return finite_difference_gradcheck(loss, {{"x", x}, {"W", w}, {"b", b}}, h, tol);
}

GradReport check_weighted_ce(Rng& rng, double h, double tol) {
    const int classes = 4;
    Tensor logits = grad_leaf({classes}, -2.0, 2.0, rng);
    const int label = static_cast<int>(rng.below(classes));
    const double weight = rng.uniform(0.5, 2.0);
    auto loss = [logits, label, weight]() {
        return weighted_cross_entropy(logits, label, weight);
    };
    return finite_difference_gradcheck(loss, {{"logits", logits}}, h, tol);
}

GradReport check_tnbof(Rng& rng, double h, double tol) {
    const int d = 3, n = 6, k = 3;
    Codebook long_cb = Codebook::create(Kernel::Rbf, k, d, rng);
    Codebook short_cb = Codebook::create(Kernel::Rbf, k, d, rng);
    Tensor x = grad_leaf({d, n}, -1.0, 1.0, rng);
    Tensor r = projection({2 * k}, rng);
    auto loss = [x, long_cb, short_cb, r]() {
        return sum_all(mul(tnbof_forward(x, long_cb, short_cb, 0.5), r));
    };
    return finite_difference_gradcheck(loss,
                                       {{"X", x},
                                        {"V_long", long_cb.codewords},
                                        {"logW_long", long_cb.log_widths},
                                        {"V_short", short_cb.codewords},
                                        {"logW_short", short_cb.log_widths}},
                                       h, tol);
}

GradReport check_tiny_model(Rng& rng, double h, double tol) {
    ModelConfig mc;
    mc.layers = parse_layer_string("conv(3,3),bn,nbof,dense(5,linear),output");
    mc.codewords = 4;
    mc.kernel = Kernel::Rbf;
    mc.placement = placement_from_string("ca,ta,ia");
    mc.input_dim = 4;
    mc.input_len = 6;
    mc.classes = 3;
    mc.init_seed = rng.next_u64();
    Model model = build_model(mc);

    std::vector<Tensor> inputs = {Tensor::uniform({4, 6}, -1.0, 1.0, rng),
                                  Tensor::uniform({4, 6}, -1.0, 1.0, rng)};
    for (auto& x : inputs) x.set_requires_grad(true);
    const std::vector<int> labels = {static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3))};

    std::vector<NamedParam> params = model.parameters();
    params.push_back({"x0", inputs[0]});
    params.push_back({"x1", inputs[1]});

    auto loss = [&model, inputs, labels]() mutable {
        ForwardOptions opt;
        opt.train = true;
        std::vector<Tensor> logits = model.forward(inputs, opt);
        Tensor total = add(weighted_cross_entropy(logits[0], labels[0], 1.0),
                           weighted_cross_entropy(logits[1], labels[1], 1.3));
        return scalar_mul(total, 0.5);
    };
    return finite_difference_gradcheck(loss, params, h, tol);
}

uint64_t fragment_hash(const char* name) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const char* p = name; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 0x100000001b3ull;
    }
    return h;
}

struct Fragment {
    const char* name;
    GradReport (*run)(Rng&, double, double);
};

constexpr Fragment kFragments[] = {
    {"matmul", check_matmul},
    {"row_softmax", check_row_softmax},
    {"reduce_mean", check_reduce_mean},
    {"rbf_quantize", check_rbf_quantize},
    {"hyperbolic_quantize", check_hyperbolic_quantize},
    {"accumulate", check_accumulate},
    {"2da_block", check_2da_block},
    {"codeword_attention", check_codeword_attention},
    {"temporal_attention", check_temporal_attention},
    {"input_attention", check_input_attention},
    {"conv1d", check_conv1d},
    {"batchnorm", check_batchnorm},
    {"maxpool", check_maxpool},
    {"dense", check_dense},
    {"weighted_ce", check_weighted_ce},
    {"tnbof", check_tnbof},
    {"tiny_model", check_tiny_model},
};

}  // namespace

std::vector<SuiteResult> run_gradcheck_suite(int seeds, double h, double tol,
                                             const std::string& filter) {
    if (seeds < 1) throw ContractError("gradcheck suite: need at least one seed");
    std::vector<SuiteResult> results;
    for (const Fragment& fragment : kFragments) {
        if (!filter.empty() && std::string(fragment.name).find(filter) == std::string::npos) {
            continue;
        }
        SuiteResult sr;
        sr.fragment = fragment.name;
        sr.report.step = h;
        sr.report.tolerance = tol;
        sr.report.pass = true;
        for (int s = 0; s < seeds; ++s) {
            Rng rng(0x5eedf00dull + 7919ull * static_cast<uint64_t>(s) +
                    fragment_hash(fragment.name));
            GradReport r = fragment.run(rng, h, tol);
            sr.report.max_rel_err = std::max(sr.report.max_rel_err, r.max_rel_err);
            sr.report.pass = sr.report.pass && r.pass;
            for (auto& e : r.entries) sr.report.entries.push_back(std::move(e));
        }
        results.push_back(std::move(sr));
    }
    if (results.empty()) throw ConfigError("gradcheck suite: no fragment matches '" + filter + "'");
    return results;
}

}  // namespace nbof
