#include "nbof/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace nbof {

const GradReport::Entry& GradReport::worst() const {
    if (entries.empty()) throw StateError("GradReport::worst: empty report");
    size_t best = 0;
    for (size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].max_rel_err > entries[best].max_rel_err) best = i;
    }
    return entries[best];
}

GradReport finite_difference_gradcheck(const LossFn& loss_fn, std::vector<NamedParam> params,
                                       double h, double tol) {
    if (h <= 0.0) throw ContractError("gradcheck: step size h must be positive");
    if (params.empty()) throw ContractError("gradcheck: no parameters to check");

    for (auto& p : params) {
        p.tensor.set_requires_grad(true);
        p.tensor.zero_grad();
    }

    Tensor loss = loss_fn();
    if (loss.size() != 1) {
        throw ContractError("gradcheck: fragment output must be scalar, got " +
                            shape_str(loss.shape()));
    }
    loss.backward();

    // Snapshot the analytic gradients before the numeric probing starts.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        analytic.push_back(p.tensor.has_grad() ? p.tensor.grad()
                                               : std::vector<double>(p.tensor.data().size(), 0.0));
    }

    GradReport report;
    report.step = h;
    report.tolerance = tol;

    NoGradGuard no_grad;  // numeric probes need values only
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& theta = params[pi].tensor.leaf_data();
        GradReport::Entry entry;
        entry.param = params[pi].name;
        for (size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + h;
            const double fp = loss_fn().value();
            theta[i] = saved - h;
            const double fm = loss_fn().value();
            theta[i] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][i];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }

    report.pass = report.max_rel_err < tol;
    for (auto& p : params) p.tensor.zero_grad();
    return report;
}

}  // namespace nbof
