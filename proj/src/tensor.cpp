#include "nbof/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace nbof {

int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void validate_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 3) {
        throw ShapeError("tensor rank must be 1..3, got " + shape_str(shape));
    }
    for (int d : shape) {
        if (d < 1) throw ShapeError("tensor dimensions must be >= 1, got " + shape_str(shape));
    }
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool on) { g_grad_enabled = on; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

Tensor Tensor::zeros(const Shape& shape) {
    validate_shape(shape);
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data.assign(static_cast<size_t>(numel(shape)), 0.0);
    return Tensor(std::move(impl));
}

Tensor Tensor::full(const Shape& shape, double value) {
    if (!std::isfinite(value)) throw NumericError("tensor fill value must be finite");
    validate_shape(shape);
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data.assign(static_cast<size_t>(numel(shape)), value);
    return Tensor(std::move(impl));
}

Tensor Tensor::from_data(const Shape& shape, std::vector<double> values) {
    validate_shape(shape);
    if (static_cast<int64_t>(values.size()) != numel(shape)) {
        throw ShapeError("data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError("tensor data contains a non-finite value");
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data = std::move(values);
    return Tensor(std::move(impl));
}

Tensor Tensor::uniform(const Shape& shape, double lo, double hi, Rng& rng) {
    validate_shape(shape);
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data.resize(static_cast<size_t>(numel(shape)));
    for (double& v : impl->data) v = rng.uniform(lo, hi);
    return Tensor(std::move(impl));
}

Tensor Tensor::uniform(const Shape& shape, double lo, double hi, uint64_t seed) {
    Rng rng(seed);
    return uniform(shape, lo, hi, rng);
}

Tensor Tensor::normal(const Shape& shape, double mean, double stddev, Rng& rng) {
    validate_shape(shape);
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data.resize(static_cast<size_t>(numel(shape)));
    for (double& v : impl->data) v = rng.normal(mean, stddev);
    return Tensor(std::move(impl));
}

int Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows(): tensor is not rank-2, shape " + shape_str(shape()));
    return impl_->shape[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols(): tensor is not rank-2, shape " + shape_str(shape()));
    return impl_->shape[1];
}

std::vector<double>& Tensor::leaf_data() {
    if (!impl_->parents.empty() || impl_->backward_fn) {
        throw StateError("leaf_data(): op outputs are immutable; only leaves may be rewritten");
    }
    return impl_->data;
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("value(): tensor is not scalar, shape " + shape_str(shape()));
    return impl_->data[0];
}

double Tensor::at(int i) const {
    if (rank() != 1) throw ShapeError("at(i): tensor is not rank-1");
    return impl_->data[static_cast<size_t>(i)];
}

double Tensor::at(int i, int j) const {
    if (rank() != 2) throw ShapeError("at(i,j): tensor is not rank-2");
    return impl_->data[static_cast<size_t>(i) * impl_->shape[1] + j];
}

double Tensor::at(int i, int j, int k) const {
    if (rank() != 3) throw ShapeError("at(i,j,k): tensor is not rank-3");
    return impl_->data[(static_cast<size_t>(i) * impl_->shape[1] + j) * impl_->shape[2] + k];
}

Tensor& Tensor::set_requires_grad(bool on) {
    if (on && (!impl_->parents.empty() || impl_->backward_fn)) {
        throw StateError("set_requires_grad: only leaf tensors may be marked as parameters");
    }
    impl_->requires_grad = on;
    return *this;
}

const std::vector<double>& Tensor::grad() const {
    if (impl_->grad.empty()) throw StateError("grad(): no gradient has been accumulated");
    return impl_->grad;
}

void Tensor::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : impl_->data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace detail {
std::vector<double>* grad_buf(const std::shared_ptr<TensorImpl>& t) {
    if (!t->requires_grad) return nullptr;
    if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
    return &t->grad;
}
}  // namespace detail

Tensor Tensor::make(const char* op, Shape shape, std::vector<double> data,
                    std::vector<Tensor> parents, BackwardFn fn) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    bool track = GradMode::enabled();
    if (track) {
        track = false;
        for (const Tensor& p : parents) {
            if (p.requires_grad()) {
                track = true;
                break;
            }
        }
    }
    if (track) {
        impl->requires_grad = true;
        impl->op = op;
        impl->parents.reserve(parents.size());
        for (const Tensor& p : parents) impl->parents.push_back(p.impl());
        impl->backward_fn = std::move(fn);
    }
    return Tensor(std::move(impl));
}

void Tensor::backward() {
    auto root = impl_;
    if (!root) throw StateError("backward: undefined tensor");
    if (root->data.size() != 1) {
        throw ContractError("backward: loss must be scalar, shape " + shape_str(root->shape));
    }
    if (!root->requires_grad) {
        throw StateError("backward: loss does not depend on any parameter requiring grad");
    }
    if (root->swept) {
        throw StateError("backward: this graph was already swept; zero gradients and rebuild first");
    }
    root->swept = true;

    // Iterative post-order DFS over grad-requiring ancestors. topo lists
    // parents before children, so reverse iteration is reverse-topological.
    struct Frame {
        TensorImpl* node;
        size_t next;
    };
    std::vector<TensorImpl*> topo;
    std::unordered_set<TensorImpl*> visited;
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next >= f.node->parents.size()) {
            topo.push_back(f.node);
            stack.pop_back();
            continue;
        }
        TensorImpl* p = f.node->parents[f.next++].get();
        if (p->requires_grad && visited.insert(p).second) {
            stack.push_back({p, 0});
        }
    }

    root->grad.assign(1, 1.0);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorImpl* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(n->grad);
    }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2) throw ShapeError("matmul: left operand must be rank-2, got " + shape_str(a.shape()));
    const int m = a.dim(0);
    const int n = a.dim(1);
    if (b.rank() == 2) {
        if (b.dim(0) != n) {
            throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " * " +
                             shape_str(b.shape()));
        }
        const int p = b.dim(1);
        std::vector<double> out(static_cast<size_t>(m) * p, 0.0);
        const auto& ad = a.data();
        const auto& bd = b.data();
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < n; ++k) {
                const double aik = ad[static_cast<size_t>(i) * n + k];
                if (aik == 0.0) continue;
                const size_t brow = static_cast<size_t>(k) * p;
                const size_t orow = static_cast<size_t>(i) * p;
                for (int j = 0; j < p; ++j) out[orow + j] += aik * bd[brow + j];
            }
        }
        auto pa = a.impl();
        auto pb = b.impl();
        return Tensor::make(
            "matmul", {m, p}, std::move(out), {a, b},
            [pa, pb, m, n, p](const std::vector<double>& g) {
                if (auto* ga = detail::grad_buf(pa)) {
                    // dA = G * B^T
                    for (int i = 0; i < m; ++i)
                        for (int k = 0; k < n; ++k) {
                            double s = 0.0;
                            for (int j = 0; j < p; ++j)
                                s += g[static_cast<size_t>(i) * p + j] *
                                     pb->data[static_cast<size_t>(k) * p + j];
                            (*ga)[static_cast<size_t>(i) * n + k] += s;
                        }
                }
                if (auto* gb = detail::grad_buf(pb)) {
                    // dB = A^T * G
                    for (int k = 0; k < n; ++k)
                        for (int j = 0; j < p; ++j) {
                            double s = 0.0;
                            for (int i = 0; i < m; ++i)
                                s += pa->data[static_cast<size_t>(i) * n + k] *
                                     g[static_cast<size_t>(i) * p + j];
                            (*gb)[static_cast<size_t>(k) * p + j] += s;
                        }
                }
            });
    }
    if (b.rank() == 1) {
        if (b.dim(0) != n) {
            throw ShapeError("matmul: matrix-vector dimensions disagree, " + shape_str(a.shape()) +
                             " * " + shape_str(b.shape()));
        }
        std::vector<double> out(static_cast<size_t>(m), 0.0);
        const auto& ad = a.data();
        const auto& bd = b.data();
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += ad[static_cast<size_t>(i) * n + k] * bd[k];
            out[i] = s;
        }
        auto pa = a.impl();
        auto pb = b.impl();
        return Tensor::make(
            "matvec", {m}, std::move(out), {a, b},
            [pa, pb, m, n](const std::vector<double>& g) {
                if (auto* ga = detail::grad_buf(pa)) {
                    for (int i = 0; i < m; ++i)
                        for (int k = 0; k < n; ++k)
                            (*ga)[static_cast<size_t>(i) * n + k] += g[i] * pb->data[k];
                }
                if (auto* gb = detail::grad_buf(pb)) {
                    for (int k = 0; k < n; ++k) {
                        double s = 0.0;
                        for (int i = 0; i < m; ++i)
                            s += pa->data[static_cast<size_t>(i) * n + k] * g[i];
                        (*gb)[k] += s;
                    }
                }
            });
    }
    throw ShapeError("matmul: right operand must be rank-1 or rank-2, got " + shape_str(b.shape()));
}

namespace {

enum class EwKind { Add, Sub, Mul };

Tensor elementwise(EwKind kind, const char* name, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, name);
    const size_t n = a.data().size();
    std::vector<double> out(n);
    const auto& ad = a.data();
    const auto& bd = b.data();
    switch (kind) {
        case EwKind::Add:
            for (size_t i = 0; i < n; ++i) out[i] = ad[i] + bd[i];
            break;
        case EwKind::Sub:
            for (size_t i = 0; i < n; ++i) out[i] = ad[i] - bd[i];
            break;
        case EwKind::Mul:
            for (size_t i = 0; i < n; ++i) out[i] = ad[i] * bd[i];
            break;
    }
    auto pa = a.impl();
    auto pb = b.impl();
    return Tensor::make(name, a.shape(), std::move(out), {a, b},
                        [kind, pa, pb, n](const std::vector<double>& g) {
                            auto* ga = detail::grad_buf(pa);
                            auto* gb = detail::grad_buf(pb);
                            switch (kind) {
                                case EwKind::Add:
                                    if (ga)
                                        for (size_t i = 0; i < n; ++i) (*ga)[i] += g[i];
                                    if (gb)
                                        for (size_t i = 0; i < n; ++i) (*gb)[i] += g[i];
                                    break;
                                case EwKind::Sub:
                                    if (ga)
                                        for (size_t i = 0; i < n; ++i) (*ga)[i] += g[i];
                                    if (gb)
                                        for (size_t i = 0; i < n; ++i) (*gb)[i] -= g[i];
                                    break;
                                case EwKind::Mul:
                                    if (ga)
                                        for (size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * pb->data[i];
                                    if (gb)
                                        for (size_t i = 0; i < n; ++i) (*gb)[i] += g[i] * pa->data[i];
                                    break;
                            }
                        });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Add, "add", a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Sub, "sub", a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Mul, "mul", a, b); }

Tensor scalar_mul(const Tensor& a, double c) {
    if (!std::isfinite(c)) throw NumericError("scalar_mul: factor must be finite");
    const size_t n = a.data().size();
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = a.data()[i] * c;
    auto pa = a.impl();
    return Tensor::make("scalar_mul", a.shape(), std::move(out), {a},
                        [pa, c, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa))
                                for (size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * c;
                        });
}

Tensor scale(const Tensor& s, const Tensor& a) {
    if (s.size() != 1) throw ShapeError("scale: scale factor must be a [1] tensor");
    const double sv = s.data()[0];
    const size_t n = a.data().size();
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = a.data()[i] * sv;
    auto ps = s.impl();
    auto pa = a.impl();
    return Tensor::make("scale", a.shape(), std::move(out), {s, a},
                        [ps, pa, sv, n](const std::vector<double>& g) {
                            if (auto* gs = detail::grad_buf(ps)) {
                                double acc = 0.0;
                                for (size_t i = 0; i < n; ++i) acc += g[i] * pa->data[i];
                                (*gs)[0] += acc;
                            }
                            if (auto* ga = detail::grad_buf(pa))
                                for (size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * sv;
                        });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: tensor must be rank-2, got " + shape_str(a.shape()));
    const int m = a.dim(0);
    const int n = a.dim(1);
    std::vector<double> out(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<size_t>(j) * m + i] = a.data()[static_cast<size_t>(i) * n + j];
    auto pa = a.impl();
    return Tensor::make("transpose", {n, m}, std::move(out), {a},
                        [pa, m, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa)) {
                                for (int i = 0; i < m; ++i)
                                    for (int j = 0; j < n; ++j)
                                        (*ga)[static_cast<size_t>(i) * n + j] +=
                                            g[static_cast<size_t>(j) * m + i];
                            }
                        });
}

Tensor row_softmax(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("row_softmax: tensor must be rank-2, got " + shape_str(a.shape()));
    const int m = a.dim(0);
    const int n = a.dim(1);
    std::vector<double> out(static_cast<size_t>(m) * n);
    const auto& ad = a.data();
    for (int i = 0; i < m; ++i) {
        const size_t row = static_cast<size_t>(i) * n;
        double mx = ad[row];
        for (int j = 1; j < n; ++j) mx = std::max(mx, ad[row + j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            out[row + j] = std::exp(ad[row + j] - mx);
            sum += out[row + j];
        }
        for (int j = 0; j < n; ++j) out[row + j] /= sum;
    }
    auto pa = a.impl();
    // Saved activation: the softmax output itself drives the Jacobian.
    auto saved = std::make_shared<std::vector<double>>(out);
    return Tensor::make("row_softmax", a.shape(), std::move(out), {a},
                        [pa, saved, m, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa)) {
                                const auto& y = *saved;
                                for (int i = 0; i < m; ++i) {
                                    const size_t row = static_cast<size_t>(i) * n;
                                    double dot = 0.0;
                                    for (int j = 0; j < n; ++j) dot += g[row + j] * y[row + j];
                                    for (int j = 0; j < n; ++j)
                                        (*ga)[row + j] += y[row + j] * (g[row + j] - dot);
                                }
                            }
                        });
}

Tensor reduce_mean_axis(const Tensor& a, int axis) {
    if (a.rank() != 2) {
        throw ShapeError("reduce_mean_axis: tensor must be rank-2, got " + shape_str(a.shape()));
    }
    if (axis != 0 && axis != 1) {
        throw ShapeError("reduce_mean_axis: axis must be 0 or 1, got " + std::to_string(axis));
    }
    const int m = a.dim(0);
    const int n = a.dim(1);
    const auto& ad = a.data();
    auto pa = a.impl();
    if (axis == 1) {
        std::vector<double> out(static_cast<size_t>(m), 0.0);
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += ad[static_cast<size_t>(i) * n + j];
            out[i] = s / n;
        }
        return Tensor::make("mean_axis1", {m}, std::move(out), {a},
                            [pa, m, n](const std::vector<double>& g) {
                                if (auto* ga = detail::grad_buf(pa)) {
                                    const double inv = 1.0 / n;
                                    for (int i = 0; i < m; ++i)
                                        for (int j = 0; j < n; ++j)
                                            (*ga)[static_cast<size_t>(i) * n + j] += g[i] * inv;
                                }
                            });
    }
    std::vector<double> out(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += ad[static_cast<size_t>(i) * n + j];
        out[j] = s / m;
    }
    return Tensor::make("mean_axis0", {n}, std::move(out), {a},
                        [pa, m, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa)) {
                                const double inv = 1.0 / m;
                                for (int i = 0; i < m; ++i)
                                    for (int j = 0; j < n; ++j)
                                        (*ga)[static_cast<size_t>(i) * n + j] += g[j] * inv;
                            }
                        });
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto pa = a.impl();
    const size_t n = a.data().size();
    return Tensor::make("sum_all", {1}, {s}, {a}, [pa, n](const std::vector<double>& g) {
        if (auto* ga = detail::grad_buf(pa))
            for (size_t i = 0; i < n; ++i) (*ga)[i] += g[0];
    });
}

Tensor mean_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    const size_t n = a.data().size();
    auto pa = a.impl();
    return Tensor::make("mean_all", {1}, {s / static_cast<double>(n)}, {a},
                        [pa, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa)) {
                                const double inv = 1.0 / static_cast<double>(n);
                                for (size_t i = 0; i < n; ++i) (*ga)[i] += g[0] * inv;
                            }
                        });
}

Tensor relu(const Tensor& a) {
    const size_t n = a.data().size();
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    auto pa = a.impl();
    return Tensor::make("relu", a.shape(), std::move(out), {a},
                        [pa, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa))
                                for (size_t i = 0; i < n; ++i)
                                    if (pa->data[i] > 0.0) (*ga)[i] += g[i];
                        });
}

Tensor tanh_of(const Tensor& a) {
    const size_t n = a.data().size();
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = std::tanh(a.data()[i]);
    auto pa = a.impl();
    auto saved = std::make_shared<std::vector<double>>(out);
    return Tensor::make("tanh", a.shape(), std::move(out), {a},
                        [pa, saved, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa)) {
                                const auto& y = *saved;
                                for (size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
                            }
                        });
}

Tensor add_col_bias(const Tensor& a, const Tensor& bias) {
    if (a.rank() != 2 || bias.rank() != 1 || bias.dim(0) != a.dim(0)) {
        throw ShapeError("add_col_bias: need MxN and M-vector, got " + shape_str(a.shape()) + " and " +
                         shape_str(bias.shape()));
    }
    const int m = a.dim(0);
    const int n = a.dim(1);
    std::vector<double> out(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<size_t>(i) * n + j] = a.data()[static_cast<size_t>(i) * n + j] + bias.data()[i];
    auto pa = a.impl();
    auto pb = bias.impl();
    return Tensor::make("add_col_bias", a.shape(), std::move(out), {a, bias},
                        [pa, pb, m, n](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa)) {
                                const size_t total = static_cast<size_t>(m) * n;
                                for (size_t i = 0; i < total; ++i) (*ga)[i] += g[i];
                            }
                            if (auto* gb = detail::grad_buf(pb)) {
                                for (int i = 0; i < m; ++i) {
                                    double s = 0.0;
                                    for (int j = 0; j < n; ++j) s += g[static_cast<size_t>(i) * n + j];
                                    (*gb)[i] += s;
                                }
                            }
                        });
}

Tensor concat(const Tensor& a, const Tensor& b) {
    if (a.rank() != 1 || b.rank() != 1) {
        throw ShapeError("concat: both tensors must be rank-1, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    const int na = a.dim(0);
    const int nb = b.dim(0);
    std::vector<double> out;
    out.reserve(static_cast<size_t>(na + nb));
    out.insert(out.end(), a.data().begin(), a.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());
    auto pa = a.impl();
    auto pb = b.impl();
    return Tensor::make("concat", {na + nb}, std::move(out), {a, b},
                        [pa, pb, na, nb](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa))
                                for (int i = 0; i < na; ++i) (*ga)[i] += g[i];
                            if (auto* gb = detail::grad_buf(pb))
                                for (int i = 0; i < nb; ++i) (*gb)[i] += g[static_cast<size_t>(na) + i];
                        });
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
    if (a.rank() != 2) throw ShapeError("slice_cols: tensor must be rank-2");
    const int m = a.dim(0);
    const int n = a.dim(1);
    if (c0 < 0 || c1 > n || c0 >= c1) {
        throw ShapeError("slice_cols: invalid column range [" + std::to_string(c0) + ", " +
                         std::to_string(c1) + ") for " + shape_str(a.shape()));
    }
    const int w = c1 - c0;
    std::vector<double> out(static_cast<size_t>(m) * w);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
            out[static_cast<size_t>(i) * w + j] = a.data()[static_cast<size_t>(i) * n + c0 + j];
    auto pa = a.impl();
    return Tensor::make("slice_cols", {m, w}, std::move(out), {a},
                        [pa, m, n, w, c0](const std::vector<double>& g) {
                            if (auto* ga = detail::grad_buf(pa)) {
                                for (int i = 0; i < m; ++i)
                                    for (int j = 0; j < w; ++j)
                                        (*ga)[static_cast<size_t>(i) * n + c0 + j] +=
                                            g[static_cast<size_t>(i) * w + j];
                            }
                        });
}

Tensor stack_batch(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ContractError("stack_batch: empty batch");
    const Shape& s0 = xs[0].shape();
    if (s0.size() != 2) throw ShapeError("stack_batch: samples must be rank-2");
    for (const Tensor& x : xs) {
        if (x.shape() != s0) {
            throw ShapeError("stack_batch: mixed sample shapes " + shape_str(s0) + " vs " +
                             shape_str(x.shape()));
        }
    }
    const int b = static_cast<int>(xs.size());
    const int m = s0[0];
    const int n = s0[1];
    const size_t per = static_cast<size_t>(m) * n;
    std::vector<double> out(per * b);
    for (int i = 0; i < b; ++i) {
        std::copy(xs[i].data().begin(), xs[i].data().end(), out.begin() + per * i);
    }
    std::vector<std::shared_ptr<TensorImpl>> impls;
    impls.reserve(xs.size());
    for (const Tensor& x : xs) impls.push_back(x.impl());
    return Tensor::make("stack_batch", {b, m, n}, std::move(out), xs,
                        [impls, per](const std::vector<double>& g) {
                            for (size_t i = 0; i < impls.size(); ++i) {
                                if (auto* gi = detail::grad_buf(impls[i])) {
                                    const size_t base = per * i;
                                    for (size_t k = 0; k < per; ++k) (*gi)[k] += g[base + k];
                                }
                            }
                        });
}

Tensor slice_batch(const Tensor& t, int b) {
    if (t.rank() != 3) throw ShapeError("slice_batch: tensor must be rank-3");
    const int nb = t.dim(0);
    if (b < 0 || b >= nb) {
        throw ShapeError("slice_batch: index " + std::to_string(b) + " out of range for " +
                         shape_str(t.shape()));
    }
    const int m = t.dim(1);
    const int n = t.dim(2);
    const size_t per = static_cast<size_t>(m) * n;
    const size_t base = per * b;
    std::vector<double> out(t.data().begin() + base, t.data().begin() + base + per);
    auto pt = t.impl();
    return Tensor::make("slice_batch", {m, n}, std::move(out), {t},
                        [pt, base, per](const std::vector<double>& g) {
                            if (auto* gt = detail::grad_buf(pt))
                                for (size_t k = 0; k < per; ++k) (*gt)[base + k] += g[k];
                        });
}

}  // namespace nbof
