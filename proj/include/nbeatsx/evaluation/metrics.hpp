#pragma once

#include "nbeatsx/data/frame.hpp"
#include "nbeatsx/data/split.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <vector>

namespace nbeatsx {

/// Rows are days, columns are hours of the day.
using DayMatrix = std::vector<std::vector<double>>;

struct MetricsReport {
    double mae = 0.0;
    double rmae = 0.0;
    double smape = 0.0;
    double rmse = 0.0;
    std::size_t n_days = 0;
    std::vector<double> daily_loss;  // sum over hours of |error|
};

namespace detail {

inline void check_same_shape(const DayMatrix& a, const DayMatrix& b, const char* what) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string("metrics: ") + what + " has " + std::to_string(b.size()) + " days, actuals " +
                         std::to_string(a.size()));
    }
    for (std::size_t d = 0; d < a.size(); ++d) {
        if (a[d].size() != b[d].size() || a[d].size() != a.front().size()) {
            throw ShapeError(std::string("metrics: ") + what + " day " + std::to_string(d) + " has mismatched hours");
        }
    }
}

}  // namespace detail

/// Daily L1 losses: sum over hours of |actual - forecast|.
inline std::vector<double> daily_l1(const DayMatrix& actuals, const DayMatrix& forecasts) {
    detail::check_same_shape(actuals, forecasts, "forecasts");
    std::vector<double> out(actuals.size(), 0.0);
    for (std::size_t d = 0; d < actuals.size(); ++d)
        for (std::size_t h = 0; h < actuals[d].size(); ++h) out[d] += std::abs(actuals[d][h] - forecasts[d][h]);
    return out;
}

/// MAE, RMSE and sMAPE of `forecasts`; rMAE relative to `naive`.
/// sMAPE terms with |y| + |yhat| = 0 contribute 0.
inline MetricsReport compute_metrics(const DayMatrix& actuals, const DayMatrix& forecasts, const DayMatrix& naive) {
    if (actuals.empty() || actuals.front().empty()) throw ShapeError("metrics: no observations");
    detail::check_same_shape(actuals, forecasts, "forecasts");
    detail::check_same_shape(actuals, naive, "naive forecasts");
    MetricsReport r;
    r.n_days = actuals.size();
    r.daily_loss.assign(r.n_days, 0.0);
    double abs_sum = 0.0, sq_sum = 0.0, sym_sum = 0.0, naive_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t d = 0; d < actuals.size(); ++d) {
        for (std::size_t h = 0; h < actuals[d].size(); ++h) {
            const double y = actuals[d][h], f = forecasts[d][h];
            if (!std::isfinite(y)) throw DataError("metrics: non-finite actual on day " + std::to_string(d));
            const double e = std::abs(y - f);
            abs_sum += e;
            sq_sum += e * e;
            const double denom = std::abs(y) + std::abs(f);
            if (denom > 0.0) sym_sum += e / denom;
            naive_sum += std::abs(y - naive[d][h]);
            r.daily_loss[d] += e;
            ++n;
        }
    }
    if (!(naive_sum > 0.0)) throw DataError("metrics: naive forecast has zero error, rMAE is undefined");
    const double count = static_cast<double>(n);
    r.mae = abs_sum / count;
    r.rmse = std::sqrt(sq_sum / count);
    r.smape = 200.0 * sym_sum / count;
    r.rmae = abs_sum / naive_sum;
    return r;
}

inline nlohmann::json to_json(const MetricsReport& r) {
    return {{"mae", r.mae}, {"rmae", r.rmae}, {"smape", r.smape}, {"rmse", r.rmse}, {"n_days", r.n_days},
            {"daily_loss", r.daily_loss}};
}

/// Lag of the similar-day rule for a day of week (0 = Monday):
/// Monday, Saturday and Sunday repeat last week, other days repeat yesterday.
inline std::size_t naive_lag_hours(int day_of_week) {
    return day_of_week == 0 || day_of_week == 5 || day_of_week == 6 ? kHoursPerWeek : kHoursPerDay;
}

/// Similar-day forecasts for `days` consecutive days starting at row `first`.
inline DayMatrix naive_forecast(const SeriesFrame& f, std::size_t first, std::size_t days) {
    if (first >= f.size() || hour_of_day(f.timestamps[first]) != 0) {
        throw DataError("naive: test start must be a midnight row inside the frame");
    }
    if (first < kHoursPerWeek) throw DataError("naive: at least 7 days of history are required");
    if (first + days * kHoursPerDay > f.size()) throw DataError("naive: test span runs past the frame");
    DayMatrix out(days, std::vector<double>(kHoursPerDay));
    for (std::size_t d = 0; d < days; ++d) {
        const std::size_t row = first + d * kHoursPerDay;
        const std::size_t lag = naive_lag_hours(day_of_week(f.timestamps[row]));
        for (std::size_t h = 0; h < kHoursPerDay; ++h) out[d][h] = f.target[row + h - lag];
    }
    return out;
}

/// Observed targets for `days` days of `hours` values starting at row `first`.
inline DayMatrix actuals_matrix(const SeriesFrame& f, std::size_t first, std::size_t days,
                                std::size_t hours = kHoursPerDay) {
    if (first + (days - 1) * kHoursPerDay + hours > f.size()) throw DataError("actuals: span runs past the frame");
    DayMatrix out(days, std::vector<double>(hours));
    for (std::size_t d = 0; d < days; ++d)
        for (std::size_t h = 0; h < hours; ++h) out[d][h] = f.target[first + d * kHoursPerDay + h];
    return out;
}

}  // namespace nbeatsx
