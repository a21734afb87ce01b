#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nbof/tensor.hpp"

namespace nbof {

/// Piecewise-constant learning-rate schedule: at and after each milestone
/// epoch the factor applies cumulatively. Epochs are 1-based.
struct LrSchedule {
    double base = 0.001;
    std::vector<std::pair<int, double>> milestones;  // (epoch, factor), ascending epochs
};

double lr_schedule_value(int epoch, const LrSchedule& schedule);
LrSchedule parse_milestones(double base, const std::string& text);  // "11:0.1,51:0.1"
std::string milestones_string(const LrSchedule& schedule);

enum class Regularizer { None, MaxNorm, WeightDecay };
Regularizer regularizer_from_string(const std::string& text);
const char* regularizer_name(Regularizer r);

/// Bias-corrected ADAM. Weight decay, when enabled, is an additive
/// lambda * theta term on the gradient. All gradients are validated before
/// any parameter moves, so a non-finite gradient leaves every parameter
/// untouched.
class Adam {
  public:
    struct Config {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    Adam() = default;
    explicit Adam(Config cfg) : cfg_(cfg) {}

    void step(std::vector<NamedParam>& params, double lr);
    void zero_grads(std::vector<NamedParam>& params);

    int64_t step_count() const { return t_; }
    const Config& config() const { return cfg_; }

    struct ParamState {
        std::vector<double> m, v;
    };
    std::map<std::string, ParamState>& state() { return state_; }
    const std::map<std::string, ParamState>& state() const { return state_; }
    void restore(int64_t t, std::map<std::string, ParamState> state);

  private:
    Config cfg_;
    int64_t t_ = 0;
    std::map<std::string, ParamState> state_;
};

/// Rescales every row of a rank-2 parameter whose L2 norm exceeds `c` to norm
/// exactly `c`; rows within the bound (and zero rows) are untouched.
void apply_max_norm(Tensor& weights, double c);

/// Per-class loss factors inversely proportional to sample counts, rescaled
/// to mean 1.
std::vector<double> class_weights_from_counts(const std::vector<int64_t>& counts);

}  // namespace nbof
