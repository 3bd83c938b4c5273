#pragma once

#include "nbeatsx/numerics/random.hpp"
#include "nbeatsx/numerics/tensor.hpp"

#include <Eigen/QR>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace nbeatsx {

enum class InitStrategy { orthogonal, he_norm, glorot_norm };

inline std::string_view to_string(InitStrategy s) {
    switch (s) {
        case InitStrategy::orthogonal: return "orthogonal";
        case InitStrategy::he_norm: return "he_norm";
        case InitStrategy::glorot_norm: return "glorot_norm";
    }
    return "?";
}

inline std::optional<InitStrategy> parse_init_strategy(std::string_view s) {
    if (s == "orthogonal") return InitStrategy::orthogonal;
    if (s == "he_norm") return InitStrategy::he_norm;
    if (s == "glorot_norm") return InitStrategy::glorot_norm;
    return std::nullopt;
}

/// Fan-in and fan-out of a weight shape: [in,out] for dense layers,
/// [out,in,kernel] for convolutions.
inline std::pair<double, double> fans(const Shape& shape) {
    if (shape.size() == 2) return {static_cast<double>(shape[0]), static_cast<double>(shape[1])};
    if (shape.size() == 3) {
        const double k = static_cast<double>(shape[2]);
        return {static_cast<double>(shape[1]) * k, static_cast<double>(shape[0]) * k};
    }
    const double n = static_cast<double>(shape_size(shape));
    return {n, n};
}

/// Draws a weight tensor.
///
/// glorot_norm: N(0, 2/(fan_in+fan_out)); he_norm: N(0, 2/fan_in);
/// orthogonal: Q of the QR factorisation of a Gaussian matrix, with column
/// signs flipped so diag(R) >= 0 (rank-2 shapes only).
inline Tensor init_weights(InitStrategy strategy, const Shape& shape, Rng& rng) {
    Tensor out(shape);
    if (strategy == InitStrategy::orthogonal) {
        if (shape.size() != 2) {
            throw ConfigError("init_weights: orthogonal initialisation needs a rank-2 shape, got " +
                              shape_to_string(shape));
        }
        const auto rows = static_cast<Eigen::Index>(shape[0]);
        const auto cols = static_cast<Eigen::Index>(shape[1]);
        const bool tall = rows >= cols;
        const Eigen::Index m = tall ? rows : cols, n = tall ? cols : rows;
        Eigen::MatrixXd a(m, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < m; ++i) a(i, j) = standard_normal(rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
        const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < n; ++j)
            if (r(j, j) < 0) q.col(j) *= -1.0;
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = tall ? q(i, j) : q(j, i);
        return out;
    }
    const auto [fan_in, fan_out] = fans(shape);
    const double variance = strategy == InitStrategy::he_norm ? 2.0 / fan_in : 2.0 / (fan_in + fan_out);
    const double sd = std::sqrt(variance);
    for (double& v : out.data()) v = sd * standard_normal(rng);
    return out;
}

}  // namespace nbeatsx
