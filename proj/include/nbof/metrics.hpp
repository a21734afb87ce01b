#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbof/error.hpp"

namespace nbof {

/// CxC confusion matrix; rows are actual classes, columns predicted.
struct Confusion {
    int classes = 0;
    std::vector<int64_t> counts;

    explicit Confusion(int classes_)
        : classes(classes_), counts(static_cast<size_t>(classes_) * classes_, 0) {
        if (classes_ < 1) throw ContractError("confusion matrix needs >= 1 class");
    }
    Confusion() = default;

    int64_t& at(int actual, int predicted) {
        return counts[static_cast<size_t>(actual) * classes + predicted];
    }
    int64_t at(int actual, int predicted) const {
        return counts[static_cast<size_t>(actual) * classes + predicted];
    }
    int64_t total() const;
    static Confusion from_rows(const std::vector<std::vector<int64_t>>& rows);
};

double accuracy(const Confusion& cm);

/// Unweighted mean of per-class F1; a class with no predictions and no
/// positives contributes 0.
double macro_f1(const Confusion& cm);

/// (sensitivity + specificity) / 2 for a binary confusion matrix with class 0
/// as positive. An undefined denominator contributes 0 and sets the flag.
double sens_spec_mean(const Confusion& cm, bool* undefined_denominator = nullptr);

struct Metrics {
    Confusion confusion;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double sens_spec = 0.0;  // binary tasks only
    bool has_sens_spec = false;
};

Metrics metrics_from_confusion(const Confusion& cm);
std::string format_confusion(const Confusion& cm);

}  // namespace nbof
