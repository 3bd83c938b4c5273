#pragma once

#include "nbeatsx/numerics/ops.hpp"

#include <vector>

namespace nbeatsx {

struct LossParts {
    Var total;
    double data = 0.0;
    double lasso = 0.0;
    double ridge = 0.0;
};

namespace detail {

inline Var scaled(Var x, double c) { return ops::hadamard(x, x.tape->constant(Tensor::scalar(c))); }

}  // namespace detail

/// MAE(pred, target) + lambda1 * sum|theta| / B + lambda2 * sum w^2.
/// The lasso term is averaged over the batch so that its weight does not
/// depend on the batch size; with B = 1 it is the plain sum.
inline LossParts training_loss(Var pred, Var target, const std::vector<Var>& coefficients,
                               const std::vector<Var>& weights, double lambda1, double lambda2) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("loss: prediction " + shape_to_string(pred.shape()) + " vs target " +
                         shape_to_string(target.shape()));
    }
    LossParts out;
    out.total = ops::mean(ops::abs(ops::sub(pred, target)));
    out.data = out.total.value().item();
    const double batch = static_cast<double>(pred.shape()[0]);
    if (lambda1 > 0.0 && !coefficients.empty()) {
        Var l1 = ops::sum(ops::abs(coefficients[0]));
        for (std::size_t i = 1; i < coefficients.size(); ++i) l1 = ops::add(l1, ops::sum(ops::abs(coefficients[i])));
        Var term = detail::scaled(l1, lambda1 / batch);
        out.lasso = term.value().item();
        out.total = ops::add(out.total, term);
    }
    if (lambda2 > 0.0 && !weights.empty()) {
        Var l2 = ops::sum(ops::hadamard(weights[0], weights[0]));
        for (std::size_t i = 1; i < weights.size(); ++i) l2 = ops::add(l2, ops::sum(ops::hadamard(weights[i], weights[i])));
        Var term = detail::scaled(l2, lambda2);
        out.ridge = term.value().item();
        out.total = ops::add(out.total, term);
    }
    return out;
}

}  // namespace nbeatsx
