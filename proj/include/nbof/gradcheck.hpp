#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nbof/tensor.hpp"

namespace nbof {

/// Result of comparing analytic gradients against central differences.
struct GradReport {
    struct Entry {
        std::string param;
        double max_rel_err = 0.0;
    };
    std::vector<Entry> entries;
    double max_rel_err = 0.0;
    double step = 0.0;
    double tolerance = 0.0;
    bool pass = false;  // pass <=> max_rel_err < tolerance

    const Entry& worst() const;
};

/// Scalar-valued model fragment: rebuilds its graph from the current values of
/// the given parameters on every call.
using LossFn = std::function<Tensor()>;

/// Compares the analytic gradient of `loss_fn` w.r.t. each parameter against
/// central differences (f(t+h) - f(t-h)) / 2h. Relative error is
/// |a - n| / max(1e-8, |a| + |n|). The numeric side only ever evaluates the
/// forward pass, so it is independent of every backward rule it checks.
GradReport finite_difference_gradcheck(const LossFn& loss_fn, std::vector<NamedParam> params,
                                       double h = 1e-4, double tol = 1e-4);

/// One fragment of the full gradient suite (one named layer/op under test).
struct SuiteResult {
    std::string fragment;
    GradReport report;
};

/// Runs central-difference checks over every differentiable layer in the
/// toolkit, `seeds` random draws each. Empty filter runs everything.
std::vector<SuiteResult> run_gradcheck_suite(int seeds = 10, double h = 1e-4, double tol = 1e-4,
                                             const std::string& filter = "");

}  // namespace nbof
