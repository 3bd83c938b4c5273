#pragma once

#include "nbeatsx/evaluation/metrics.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <string>
#include <vector>

namespace nbeatsx {

enum class Conditioning { constant_only, constant_plus_lags };

inline std::string_view to_string(Conditioning c) {
    return c == Conditioning::constant_only ? "constant_only" : "constant_plus_lags";
}

struct GWResult {
    double statistic = 0.0;
    std::size_t dof = 1;
    double p_value = 1.0;
    double mean_differential = 0.0;  // mean of Delta = loss_A - loss_B; positive favours B
    Conditioning conditioning = Conditioning::constant_plus_lags;
    std::size_t lags = 1;
    std::size_t observations = 0;
};

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_sf(double x, std::size_t dof) {
    if (!(x > 0.0)) return 1.0;
    return boost::math::gamma_q(0.5 * static_cast<double>(dof), 0.5 * x);
}

/// Conditional predictive ability test on a daily loss differential series.
/// Instruments are z_{d-1} = [1, Delta_{d-1}, ..., Delta_{d-q}]; the statistic
/// is n * R^2 of regressing a vector of ones on z_{d-1} * Delta_d, chi-square
/// with q + 1 degrees of freedom under equal predictive ability.
inline GWResult gw_test_differential(const std::vector<double>& delta, std::size_t lags = 1) {
    if (delta.size() <= lags + 10) {
        throw DataError("gw: need more than " + std::to_string(lags + 10) + " days, got " +
                        std::to_string(delta.size()));
    }
    GWResult r;
    r.lags = lags;
    r.dof = lags + 1;
    r.conditioning = lags == 0 ? Conditioning::constant_only : Conditioning::constant_plus_lags;
    double mean = 0.0;
    for (double v : delta) mean += v;
    r.mean_differential = mean / static_cast<double>(delta.size());

    const std::size_t n = delta.size() - lags;
    r.observations = n;
    bool all_zero = true;
    for (double v : delta) all_zero = all_zero && v == 0.0;
    if (all_zero) return r;

    Eigen::MatrixXd reg(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(lags + 1));
    for (std::size_t t = 0; t < n; ++t) {
        const double d = delta[t + lags];
        reg(static_cast<Eigen::Index>(t), 0) = d;
        for (std::size_t k = 1; k <= lags; ++k) reg(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = delta[t + lags - k] * d;
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    const Eigen::VectorXd beta = reg.completeOrthogonalDecomposition().solve(ones);
    const Eigen::VectorXd resid = ones - reg * beta;
    const double r2 = 1.0 - resid.squaredNorm() / static_cast<double>(n);
    r.statistic = static_cast<double>(n) * r2;
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

/// Delta_d = ||e_A,d||_1 - ||e_B,d||_1 from hourly error matrices.
inline std::vector<double> loss_differential(const DayMatrix& errors_a, const DayMatrix& errors_b) {
    detail::check_same_shape(errors_a, errors_b, "errors of model B");
    std::vector<double> delta(errors_a.size(), 0.0);
    for (std::size_t d = 0; d < errors_a.size(); ++d)
        for (std::size_t h = 0; h < errors_a[d].size(); ++h) delta[d] += std::abs(errors_a[d][h]) - std::abs(errors_b[d][h]);
    return delta;
}

inline GWResult gw_test(const DayMatrix& errors_a, const DayMatrix& errors_b, std::size_t lags = 1) {
    return gw_test_differential(loss_differential(errors_a, errors_b), lags);
}

/// Unconditional test: T * mean(Delta)^2 / mean(Delta^2), chi-square with one degree of freedom.
inline GWResult dm_test(const std::vector<double>& delta) {
    GWResult r;
    r.lags = 0;
    r.conditioning = Conditioning::constant_only;
    r.observations = delta.size();
    if (delta.empty()) throw DataError("dm: empty loss differential");
    double s1 = 0.0, s2 = 0.0;
    for (double v : delta) {
        s1 += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(delta.size());
    r.mean_differential = s1 / n;
    if (s2 == 0.0) return r;
    r.statistic = s1 * s1 / s2;
    r.p_value = chi_square_sf(r.statistic, 1);
    return r;
}

/// Hourly errors actual - forecast.
inline DayMatrix error_matrix(const DayMatrix& actuals, const DayMatrix& forecasts) {
    detail::check_same_shape(actuals, forecasts, "forecasts");
    DayMatrix e = actuals;
    for (std::size_t d = 0; d < e.size(); ++d)
        for (std::size_t h = 0; h < e[d].size(); ++h) e[d][h] -= forecasts[d][h];
    return e;
}

struct GWMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> p_values;  // [row][col]
    std::vector<std::vector<bool>> column_better;

    void write_csv(std::ostream& os) const {
        os << "model";
        for (const auto& n : names) os << ',' << n;
        os << '\n';
        for (std::size_t i = 0; i < names.size(); ++i) {
            os << names[i];
            for (double p : p_values[i]) os << ',' << format_number(p);
            os << '\n';
        }
    }
};

/// Pairwise tests. Entry (i, j) is the p-value for "column model j is more
/// accurate than row model i": the test p-value when j has the lower mean
/// daily loss, and 1 otherwise (including the diagonal).
inline GWMatrix gw_matrix(const std::vector<std::string>& names, const std::vector<DayMatrix>& forecasts,
                          const DayMatrix& actuals, std::size_t lags = 1) {
    if (forecasts.size() < 2) throw ConfigError("gw matrix: need at least two forecast sets");
    if (names.size() != forecasts.size()) throw ConfigError("gw matrix: one name per forecast set required");
    const std::size_t k = forecasts.size();
    std::vector<DayMatrix> errors;
    for (const auto& f : forecasts) errors.push_back(error_matrix(actuals, f));
    GWMatrix m{names, std::vector<std::vector<double>>(k, std::vector<double>(k, 1.0)),
               std::vector<std::vector<bool>>(k, std::vector<bool>(k, false))};
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const GWResult r = gw_test(errors[i], errors[j], lags);
            if (r.mean_differential > 0.0) {
                m.p_values[i][j] = r.p_value;
                m.column_better[i][j] = true;
            }
        }
    return m;
}

}  // namespace nbeatsx
