#include "nbof/optimizer.hpp"

#include <cmath>
#include <sstream>

namespace nbof {

double lr_schedule_value(int epoch, const LrSchedule& schedule) {
    double lr = schedule.base;
    for (const auto& [milestone, factor] : schedule.milestones) {
        if (epoch >= milestone) lr *= factor;
    }
    return lr;
}

LrSchedule parse_milestones(double base, const std::string& text) {
    LrSchedule s;
    s.base = base;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("milestone '" + item + "' must be epoch:factor");
        }
        try {
            int epoch = std::stoi(item.substr(0, colon));
            double factor = std::stod(item.substr(colon + 1));
            s.milestones.emplace_back(epoch, factor);
        } catch (const std::exception&) {
            throw ConfigError("malformed milestone '" + item + "'");
        }
    }
    for (size_t i = 1; i < s.milestones.size(); ++i) {
        if (s.milestones[i].first <= s.milestones[i - 1].first) {
            throw ConfigError("milestone epochs must be strictly ascending");
        }
    }
    return s;
}

std::string milestones_string(const LrSchedule& schedule) {
    std::ostringstream os;
    for (size_t i = 0; i < schedule.milestones.size(); ++i) {
        if (i) os << ",";
        os << schedule.milestones[i].first << ":" << schedule.milestones[i].second;
    }
    return os.str();
}

Regularizer regularizer_from_string(const std::string& text) {
    if (text == "none") return Regularizer::None;
    if (text == "maxnorm") return Regularizer::MaxNorm;
    if (text == "decay") return Regularizer::WeightDecay;
    throw ConfigError("unknown regularizer '" + text + "' (expected maxnorm, decay, none)");
}

const char* regularizer_name(Regularizer r) {
    switch (r) {
        case Regularizer::None: return "none";
        case Regularizer::MaxNorm: return "maxnorm";
        case Regularizer::WeightDecay: return "decay";
    }
    return "none";
}

void Adam::step(std::vector<NamedParam>& params, double lr) {
    // Validate every gradient first: a bad gradient must leave all parameters
    // untouched.
    for (const auto& p : params) {
        if (!p.tensor.has_grad()) {
            throw StateError("adam: parameter '" + p.name + "' has no gradient");
        }
        for (double g : p.tensor.grad()) {
            if (!std::isfinite(g)) {
                throw NumericError("adam: non-finite gradient in parameter '" + p.name + "'");
            }
        }
    }

    t_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

    for (auto& p : params) {
        auto& theta = p.tensor.leaf_data();
        const auto& grad = p.tensor.grad();
        ParamState& st = state_[p.name];
        if (st.m.empty()) {
            st.m.assign(theta.size(), 0.0);
            st.v.assign(theta.size(), 0.0);
        } else if (st.m.size() != theta.size()) {
            throw StateError("adam: state size mismatch for parameter '" + p.name + "'");
        }
        for (size_t i = 0; i < theta.size(); ++i) {
            const double g = grad[i] + cfg_.weight_decay * theta[i];
            st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
            st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = st.m[i] / bc1;
            const double v_hat = st.v[i] / bc2;
            theta[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

void Adam::zero_grads(std::vector<NamedParam>& params) {
    for (auto& p : params) p.tensor.zero_grad();
}

void Adam::restore(int64_t t, std::map<std::string, ParamState> state) {
    t_ = t;
    state_ = std::move(state);
}

void apply_max_norm(Tensor& weights, double c) {
    if (c <= 0.0) throw ConfigError("max-norm constraint must be positive");
    if (weights.rank() != 2) {
        throw ShapeError("apply_max_norm: expected a rank-2 weight matrix, got " +
                         shape_str(weights.shape()));
    }
    const int rows = weights.dim(0);
    const int cols = weights.dim(1);
    auto& data = weights.leaf_data();
    for (int i = 0; i < rows; ++i) {
        double sq = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double v = data[static_cast<size_t>(i) * cols + j];
            sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm > c) {
            const double factor = c / norm;
            for (int j = 0; j < cols; ++j) data[static_cast<size_t>(i) * cols + j] *= factor;
        }
    }
}

std::vector<double> class_weights_from_counts(const std::vector<int64_t>& counts) {
    if (counts.empty()) throw ConfigError("class weights: empty count vector");
    std::vector<double> weights(counts.size());
    double sum = 0.0;
    for (size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 1) {
            throw ConfigError("class weights: class " + std::to_string(i) + " has no samples");
        }
        weights[i] = 1.0 / static_cast<double>(counts[i]);
        sum += weights[i];
    }
    const double mean = sum / static_cast<double>(counts.size());
    for (double& w : weights) w /= mean;
    return weights;
}

}  // namespace nbof
