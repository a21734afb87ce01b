#include "nbof/metrics.hpp"

#include <sstream>

namespace nbof {

int64_t Confusion::total() const {
    int64_t t = 0;
    for (int64_t v : counts) t += v;
    return t;
}

Confusion Confusion::from_rows(const std::vector<std::vector<int64_t>>& rows) {
    Confusion cm(static_cast<int>(rows.size()));
    for (int i = 0; i < cm.classes; ++i) {
        if (rows[i].size() != rows.size()) {
            throw ContractError("confusion matrix must be square");
        }
        for (int j = 0; j < cm.classes; ++j) {
            if (rows[i][j] < 0) throw ContractError("confusion matrix entries must be nonnegative");
            cm.at(i, j) = rows[i][j];
        }
    }
    return cm;
}

double accuracy(const Confusion& cm) {
    const int64_t total = cm.total();
    if (total == 0) throw ContractError("accuracy: empty confusion matrix");
    int64_t correct = 0;
    for (int i = 0; i < cm.classes; ++i) correct += cm.at(i, i);
    return static_cast<double>(correct) / static_cast<double>(total);
}

double macro_f1(const Confusion& cm) {
    if (cm.classes < 1) throw ContractError("macro_f1: empty confusion matrix");
    double sum = 0.0;
    for (int c = 0; c < cm.classes; ++c) {
        int64_t tp = cm.at(c, c);
        int64_t fp = 0, fn = 0;
        for (int o = 0; o < cm.classes; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                                   : 0.0;
        sum += f1;
    }
    return sum / cm.classes;
}

double sens_spec_mean(const Confusion& cm, bool* undefined_denominator) {
    if (cm.classes != 2) throw ContractError("sens_spec_mean: confusion matrix must be 2x2");
    if (undefined_denominator) *undefined_denominator = false;
    const int64_t tp = cm.at(0, 0);
    const int64_t fn = cm.at(0, 1);
    const int64_t fp = cm.at(1, 0);
    const int64_t tn = cm.at(1, 1);
    double sens = 0.0, spec = 0.0;
    if (tp + fn > 0) {
        sens = static_cast<double>(tp) / (tp + fn);
    } else if (undefined_denominator) {
        *undefined_denominator = true;
    }
    if (tn + fp > 0) {
        spec = static_cast<double>(tn) / (tn + fp);
    } else if (undefined_denominator) {
        *undefined_denominator = true;
    }
    return 0.5 * (sens + spec);
}

Metrics metrics_from_confusion(const Confusion& cm) {
    Metrics m;
    m.confusion = cm;
    m.accuracy = accuracy(cm);
    m.macro_f1 = macro_f1(cm);
    if (cm.classes == 2) {
        m.sens_spec = sens_spec_mean(cm);
        m.has_sens_spec = true;
    }
    return m;
}

std::string format_confusion(const Confusion& cm) {
    std::ostringstream os;
    os << "actual\\predicted";
    for (int j = 0; j < cm.classes; ++j) os << "\t" << j;
    os << "\n";
    for (int i = 0; i < cm.classes; ++i) {
        os << i;
        for (int j = 0; j < cm.classes; ++j) os << "\t" << cm.at(i, j);
        os << "\n";
    }
    return os.str();
}

}  // namespace nbof
