#pragma once

#include "nbeatsx/data/calendar.hpp"
#include "nbeatsx/data/frame.hpp"
#include "nbeatsx/data/split.hpp"
#include "nbeatsx/training/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace nbeatsx {

inline constexpr double kMadConsistency = 1.4826;
inline constexpr double kMinScale = 1e-8;

/// z = (x - center) / scale, followed by asinh when `asinh` is set.
struct ColumnStats {
    double center = 0.0;
    double scale = 1.0;
    bool asinh = false;

    double apply(double x) const {
        const double z = (x - center) / scale;
        return asinh ? std::asinh(z) : z;
    }
    double invert(double z) const { return (asinh ? std::sinh(z) : z) * scale + center; }

    friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

struct NormalizationStats {
    NormalizationScheme scheme = NormalizationScheme::none;
    ColumnStats target;
    std::vector<ColumnStats> covariates;

    friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw DataError("median of an empty column");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// Statistics of one column under a scheme. Standard deviation uses the
/// population (1/n) convention; MAD is scaled by 1.4826 and floored at 1e-8.
inline ColumnStats fit_column(const std::vector<double>& x, NormalizationScheme scheme, const std::string& name) {
    ColumnStats s;
    switch (scheme) {
        case NormalizationScheme::none: return s;
        case NormalizationScheme::std_dev: {
            double mean = 0.0;
            for (double v : x) mean += v;
            mean /= static_cast<double>(x.size());
            double var = 0.0;
            for (double v : x) var += (v - mean) * (v - mean);
            var /= static_cast<double>(x.size());
            if (!(var > 0.0)) {
                throw DataError("normalization: column '" + name +
                                "' is constant, std scaling is undefined; use the median scheme");
            }
            s.center = mean;
            s.scale = std::sqrt(var);
            return s;
        }
        case NormalizationScheme::median:
        case NormalizationScheme::invariant: {
            s.center = median_of(x);
            std::vector<double> dev(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::abs(x[i] - s.center);
            s.scale = std::max(kMadConsistency * median_of(std::move(dev)), kMinScale);
            s.asinh = scheme == NormalizationScheme::invariant;
            return s;
        }
    }
    return s;
}

/// Fits on rows [rows.begin, rows.end) only. Calendar columns are not
/// standardised: the one-hot days pass through, the hour index is divided by 24.
inline NormalizationStats fit_normalization(const SeriesFrame& f, HourRange rows, NormalizationScheme scheme) {
    if (rows.end > f.size() || rows.size() == 0) throw DataError("normalization: empty or out-of-range fit span");
    auto span = [&](const std::vector<double>& col) {
        return std::vector<double>(col.begin() + static_cast<std::ptrdiff_t>(rows.begin),
                                   col.begin() + static_cast<std::ptrdiff_t>(rows.end));
    };
    NormalizationStats st;
    st.scheme = scheme;
    st.target = fit_column(span(f.target), scheme, "price");
    for (std::size_t c = 0; c < f.n_covariates(); ++c) {
        const std::string& name = f.covariate_names[c];
        if (name == kHourColumn) {
            st.covariates.push_back({0.0, 24.0, false});
        } else if (is_calendar_column(name)) {
            st.covariates.emplace_back();
        } else {
            st.covariates.push_back(fit_column(span(f.covariates[c]), scheme, name));
        }
    }
    return st;
}

inline std::vector<double> apply_column(const ColumnStats& s, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = s.apply(x[i]);
    return out;
}

inline nlohmann::json to_json(const NormalizationStats& s) {
    auto col = [](const ColumnStats& c) { return nlohmann::json{{"center", c.center}, {"scale", c.scale}, {"asinh", c.asinh}}; };
    nlohmann::json cov = nlohmann::json::array();
    for (const auto& c : s.covariates) cov.push_back(col(c));
    return {{"scheme", to_string(s.scheme)}, {"target", col(s.target)}, {"covariates", cov}};
}

inline NormalizationStats normalization_from_json(const nlohmann::json& j) {
    auto col = [](const nlohmann::json& c) {
        return ColumnStats{c.at("center").get<double>(), c.at("scale").get<double>(), c.at("asinh").get<bool>()};
    };
    NormalizationStats s;
    const auto scheme = parse_normalization(j.at("scheme").get<std::string>());
    if (!scheme) throw ConfigError("unknown normalization scheme");
    s.scheme = *scheme;
    s.target = col(j.at("target"));
    for (const auto& c : j.at("covariates")) s.covariates.push_back(col(c));
    return s;
}

}  // namespace nbeatsx
