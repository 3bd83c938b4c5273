#pragma once

#include "nbeatsx/error.hpp"
#include "nbeatsx/model/config.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nbeatsx {

/// Per-stack view of one forecast window in original units.
///
/// Columns are defined through partial sums: with P_s the normalized sum of
/// stacks 0..s and inv the target denormalization, column s is
/// inv(P_s) - inv(P_{s-1}) (inv(P_{-1}) = inv(0)). The anchor column (the
/// trend stack, else the first) also absorbs inv(0) - level, so that
/// level + sum(columns) reproduces the forecast for any normalization.
struct ForecastDecomposition {
    double level = 0.0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> components;
    std::vector<double> forecast;
    std::optional<std::vector<double>> residual;  // actual - forecast

    std::size_t horizon() const { return forecast.size(); }

    /// level + sum of columns at step h, summed in column order.
    double reassembled(std::size_t h) const {
        double v = level;
        for (const auto& c : components) v += c[h];
        return v;
    }
};

/// Unique column names, e.g. {"trend", "seasonality", "exogenous"} or {"identity", "identity_2"}.
inline std::vector<std::string> component_names(const ModelConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& s : cfg.stacks) {
        std::string base(to_string(s.kind));
        std::size_t seen = 1;
        for (const auto& n : out)
            if (n == base || n.rfind(base + "_", 0) == 0) ++seen;
        out.push_back(seen == 1 ? base : base + "_" + std::to_string(seen));
    }
    return out;
}

inline ForecastDecomposition decompose(const ModelConfig& cfg, const std::vector<std::vector<double>>& normalized,
                                       double level, const std::function<double(double)>& inverse,
                                       const std::optional<std::vector<double>>& actuals = std::nullopt) {
    if (normalized.size() != cfg.stacks.size()) {
        throw ShapeError("decompose: " + std::to_string(normalized.size()) + " components for " +
                         std::to_string(cfg.stacks.size()) + " stacks");
    }
    const std::size_t H = cfg.horizon;
    for (const auto& c : normalized)
        if (c.size() != H) throw ShapeError("decompose: component length differs from the horizon");

    ForecastDecomposition d;
    d.level = level;
    d.names = component_names(cfg);
    std::size_t anchor = 0;
    for (std::size_t s = 0; s < cfg.stacks.size(); ++s) {
        if (cfg.stacks[s].kind == StackKind::trend) {
            anchor = s;
            break;
        }
    }
    const double base = inverse(0.0);
    std::vector<double> partial(H, 0.0), previous(H, base);
    for (std::size_t s = 0; s < normalized.size(); ++s) {
        std::vector<double> col(H);
        for (std::size_t h = 0; h < H; ++h) {
            partial[h] += normalized[s][h];
            const double now = inverse(partial[h]);
            col[h] = now - previous[h];
            previous[h] = now;
        }
        d.components.push_back(std::move(col));
    }
    for (double& v : d.components[anchor]) v += base - level;
    d.forecast = previous;
    if (actuals) {
        if (actuals->size() != H) throw ShapeError("decompose: actuals length differs from the horizon");
        std::vector<double> r(H);
        for (std::size_t h = 0; h < H; ++h) r[h] = (*actuals)[h] - d.forecast[h];
        d.residual = std::move(r);
    }
    return d;
}

}  // namespace nbeatsx
