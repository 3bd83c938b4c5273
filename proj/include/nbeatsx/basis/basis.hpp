#pragma once

// Fixed basis matrices V (span_len x N_s) onto which block coefficients are
// projected: polynomial trend, harmonic seasonality, exogenous covariates
// and the identity (generic) basis.

#include "nbeatsx/numerics/tensor.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace nbeatsx::basis {

enum class Span { backcast, forecast };
enum class BasisKind { trend, seasonality, exogenous, identity };

inline std::string_view to_string(BasisKind k) {
    switch (k) {
        case BasisKind::trend: return "trend";
        case BasisKind::seasonality: return "seasonality";
        case BasisKind::exogenous: return "exogenous";
        case BasisKind::identity: return "identity";
    }
    return "?";
}

/// Time points of a window, both spans normalised by the horizon H:
/// forecast [0, 1, ..., H-1] / H, backcast [-L, ..., -1] / H.
struct TimeGrid {
    Span span = Span::forecast;
    std::vector<double> points;
};

struct BasisMatrix {
    BasisKind kind = BasisKind::identity;
    Span span = Span::forecast;
    Tensor matrix;  // span_len x N_s

    std::size_t span_length() const { return matrix.dim(0); }
    std::size_t columns() const { return matrix.dim(1); }
};

inline TimeGrid time_grid(Span span, std::size_t input_size, std::size_t horizon) {
    if (input_size == 0 || horizon == 0) throw ConfigError("time_grid: L and H must be positive");
    TimeGrid grid{span, {}};
    const double h = static_cast<double>(horizon);
    if (span == Span::forecast) {
        grid.points.resize(horizon);
        for (std::size_t i = 0; i < horizon; ++i) grid.points[i] = static_cast<double>(i) / h;
    } else {
        grid.points.resize(input_size);
        for (std::size_t i = 0; i < input_size; ++i) {
            grid.points[i] = -static_cast<double>(input_size - i) / h;
        }
    }
    return grid;
}

/// Polynomial basis T = [1, t, ..., t^n_pol].
inline BasisMatrix trend_basis(const TimeGrid& grid, std::size_t n_pol) {
    const std::size_t n = grid.points.size();
    Tensor m({n, n_pol + 1});
    for (std::size_t r = 0; r < n; ++r) {
        double p = 1.0;
        for (std::size_t i = 0; i <= n_pol; ++i) {
            m.at(r, i) = p;
            p *= grid.points[r];
        }
    }
    return {BasisKind::trend, grid.span, std::move(m)};
}

/// Number of harmonic columns for horizon H: 1 + 2 * floor(H/2 - 1), which is H - 1 for even H.
inline std::size_t harmonic_columns(std::size_t horizon) {
    const std::size_t harmonics = horizon / 2 >= 1 ? horizon / 2 - 1 : 0;
    return 1 + 2 * harmonics;
}

/// Harmonic basis S = [1, cos(2 pi i t / n_hr)_{i=1..K}, sin(2 pi i t / n_hr)_{i=1..K}]
/// with K = floor(H/2 - 1). The column count depends on H only, so backcast
/// and forecast spans share it.
inline BasisMatrix harmonic_basis(const TimeGrid& grid, std::size_t horizon, double n_harmonics) {
    if (horizon < 2) throw ConfigError("harmonic_basis: horizon must be at least 2");
    if (!(n_harmonics > 0.0)) throw ConfigError("harmonic_basis: N_hr must be positive");
    const std::size_t n = grid.points.size();
    const std::size_t k = (harmonic_columns(horizon) - 1) / 2;
    Tensor m({n, 1 + 2 * k});
    for (std::size_t r = 0; r < n; ++r) {
        m.at(r, 0) = 1.0;
        for (std::size_t i = 1; i <= k; ++i) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) * grid.points[r] / n_harmonics;
            m.at(r, i) = std::cos(angle);
            m.at(r, k + i) = std::sin(angle);
        }
    }
    return {BasisKind::seasonality, grid.span, std::move(m)};
}

/// The covariate window itself (span_len x N_x) acts as the basis.
inline BasisMatrix exogenous_basis(const Tensor& window, Span span) {
    if (window.rank() != 2) {
        throw ShapeError("exogenous_basis: expected span_len x N_x, got " + shape_to_string(window.shape()));
    }
    if (!window.all_finite()) throw DataError("exogenous_basis: covariate window contains non-finite values");
    return {BasisKind::exogenous, span, window};
}

inline BasisMatrix identity_basis(std::size_t span_length, Span span) {
    if (span_length == 0) throw ConfigError("identity_basis: span length must be positive");
    Tensor m({span_length, span_length});
    for (std::size_t i = 0; i < span_length; ++i) m.at(i, i) = 1.0;
    return {BasisKind::identity, span, std::move(m)};
}

/// V * theta for a single coefficient vector.
inline std::vector<double> project(const BasisMatrix& basis, const std::vector<double>& theta) {
    if (theta.size() != basis.columns()) {
        throw ShapeError("project: basis has " + std::to_string(basis.columns()) + " columns but theta has " +
                         std::to_string(theta.size()) + " entries");
    }
    std::vector<double> out(basis.span_length(), 0.0);
    for (std::size_t r = 0; r < out.size(); ++r)
        for (std::size_t c = 0; c < theta.size(); ++c) out[r] += basis.matrix.at(r, c) * theta[c];
    return out;
}

}  // namespace nbeatsx::basis
