#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nbof/error.hpp"
#include "nbof/rng.hpp"

namespace nbof {

/// Dense tensor shape, rank 1..3, every dimension >= 1.
using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
void validate_shape(const Shape& shape);

class Tensor;
using BackwardFn = std::function<void(const std::vector<double>& upstream)>;

/// One node of the computation graph. Leaves have no parents; op outputs keep
/// shared ownership of their inputs plus a closure implementing the backward
/// rule. The graph is acyclic by construction (children point at parents).
struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    bool swept = false;  // backward() already ran from this node
    std::string op;      // empty for leaves
    std::vector<std::shared_ptr<TensorImpl>> parents;
    BackwardFn backward_fn;
};

/// Thread-local switch disabling graph construction (eval-mode forwards).
class GradMode {
  public:
    static bool enabled();
    static void set_enabled(bool on);
};

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    bool prev;
};

/// Value-semantics handle over a graph node. Data is immutable once produced
/// by an op; only leaf tensors may be rewritten in place (optimizer steps) and
/// only the grad buffer mutates during a backward sweep.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(const Shape& shape);
    static Tensor full(const Shape& shape, double value);
    /// Validates every entry is finite.
    static Tensor from_data(const Shape& shape, std::vector<double> values);
    static Tensor uniform(const Shape& shape, double lo, double hi, Rng& rng);
    static Tensor uniform(const Shape& shape, double lo, double hi, uint64_t seed);
    static Tensor normal(const Shape& shape, double mean, double stddev, Rng& rng);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(impl_->data.size()); }
    int rows() const;
    int cols() const;

    const std::vector<double>& data() const { return impl_->data; }
    /// In-place access for leaf parameters (optimizer updates). Calling this
    /// on an op output is a state error: op outputs are immutable.
    std::vector<double>& leaf_data();

    double value() const;  // scalar convenience, requires size()==1
    double at(int i) const;
    double at(int i, int j) const;
    double at(int i, int j, int k) const;

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_requires_grad(bool on);

    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    const std::vector<double>& grad() const;
    void zero_grad();

    /// Reverse-topological sweep from a scalar loss. Each reachable node is
    /// visited exactly once; gradients accumulate additively where a tensor
    /// feeds several consumers. Sweeping the same loss twice is an error.
    void backward();

    bool all_finite() const;

    /// Graph-building hook shared by every op in the toolkit. Records parents
    /// and the backward closure only when grad mode is on and some parent
    /// requires grad; otherwise returns a detached value node.
    static Tensor make(const char* op, Shape shape, std::vector<double> data,
                       std::vector<Tensor> parents, BackwardFn fn);

    std::shared_ptr<TensorImpl> impl() const { return impl_; }
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  private:
    std::shared_ptr<TensorImpl> impl_;
};

/// Named parameter binding used by the optimizer and checkpoints.
struct NamedParam {
    std::string name;
    Tensor tensor;
};

namespace detail {
/// Grad buffer of a node, allocated (zeroed) on first use; null when the node
/// does not require grad.
std::vector<double>* grad_buf(const std::shared_ptr<TensorImpl>& t);
}  // namespace detail

// Primitive differentiable ops. All inputs must be finite; shape violations
// throw ShapeError.
Tensor matmul(const Tensor& a, const Tensor& b);  // MxN * NxP, or MxN * N-vector
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor scale(const Tensor& s, const Tensor& a);  // s is a [1] tensor
Tensor transpose(const Tensor& a);
Tensor row_softmax(const Tensor& a);
Tensor reduce_mean_axis(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh_of(const Tensor& a);
Tensor add_col_bias(const Tensor& a, const Tensor& bias);  // MxN + M-vector per column
Tensor concat(const Tensor& a, const Tensor& b);           // rank-1 tensors
Tensor slice_cols(const Tensor& a, int c0, int c1);        // columns [c0, c1)
Tensor stack_batch(const std::vector<Tensor>& xs);         // B equal MxN -> BxMxN
Tensor slice_batch(const Tensor& t, int b);                // BxMxN -> MxN

}  // namespace nbof
