#pragma once

#include "nbeatsx/numerics/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace nbeatsx {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators, aligned with a ParameterSet.
struct AdamState {
    ParameterSet first_moment;
    ParameterSet second_moment;
    std::int64_t step = 0;

    static AdamState for_parameters(const ParameterSet& params) {
        return AdamState{params.zeros_like(), params.zeros_like(), 0};
    }
};

/// One bias-corrected ADAM update of `params` in place.
inline void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, const AdamConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("adam: learning rate must be positive");
    if (state.first_moment.empty() && !params.empty()) state = AdamState::for_parameters(params);
    if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
        throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].shape() != grads[i].shape() || params[i].shape() != state.first_moment[i].shape()) {
            throw ShapeError("adam: parameter '" + params.name(i) + "' has shape " +
                             shape_to_string(params[i].shape()) + " but gradient " +
                             shape_to_string(grads[i].shape()));
        }
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        const Tensor& g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            p[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

}  // namespace nbeatsx
