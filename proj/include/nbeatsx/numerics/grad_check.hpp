#pragma once

#include "nbeatsx/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace nbeatsx {

/// Builds a scalar loss on the given tape from parameter values.
using GraphBuilder = std::function<Var(Tape&, const ParameterSet&)>;

inline constexpr double kGradCheckFloor = 1e-4;

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t excluded = 0;  // entries sitting on a kink of the loss
    std::string worst_parameter;
    std::size_t worst_index = 0;
};

namespace detail {

inline double evaluate(const GraphBuilder& f, const ParameterSet& params, bool training) {
    Tape tape(training);
    const double v = f(tape, params).value().item();
    if (!std::isfinite(v)) throw Error("grad_check: loss is not finite");
    return v;
}

}  // namespace detail

/// Compares tape gradients with central differences (f(x+eps)-f(x-eps))/(2 eps).
///
/// The relative error of an entry uses max(|analytic|, |numeric|, kGradCheckFloor)
/// as the denominator: gradients below the floor are compared absolutely,
/// since roundoff in f(x+eps)-f(x-eps) is about 1e-10 at eps = 1e-6. Entries whose one-sided differences disagree sit on a kink
/// (ReLU corner, |r| at r = 0, ...) and are excluded.
inline GradCheckResult grad_check(const GraphBuilder& f, const ParameterSet& params, double eps = 1e-6,
                                  bool training = false) {
    if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be positive");
    ParameterSet analytic;
    double f0 = 0.0;
    {
        Tape tape(training);
        Var loss = f(tape, params);
        f0 = loss.value().item();
        if (!std::isfinite(f0)) throw Error("grad_check: loss is not finite");
        analytic = tape.backward(loss);
    }
    GradCheckResult result;
    ParameterSet probe = params;
    for (std::size_t p = 0; p < analytic.size(); ++p) {
        const std::size_t slot = probe.index_of(analytic.name(p));
        for (std::size_t k = 0; k < probe[slot].size(); ++k) {
            const double original = probe[slot][k];
            probe[slot][k] = original + eps;
            const double fp = detail::evaluate(f, probe, training);
            probe[slot][k] = original - eps;
            const double fm = detail::evaluate(f, probe, training);
            probe[slot][k] = original;

            const double forward = (fp - f0) / eps;
            const double backward = (f0 - fm) / eps;
            if (std::abs(forward - backward) > 1e-3 * std::max({1.0, std::abs(forward), std::abs(backward)})) {
                ++result.excluded;
                continue;
            }
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = analytic[p][k];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
            ++result.checked;
            if (rel > result.max_relative_error) {
                result.max_relative_error = rel;
                result.worst_parameter = analytic.name(p);
                result.worst_index = k;
            }
        }
    }
    return result;
}

}  // namespace nbeatsx
