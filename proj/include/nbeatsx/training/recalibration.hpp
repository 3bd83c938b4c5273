#pragma once

#include "nbeatsx/data/split.hpp"
#include "nbeatsx/model/decomposition.hpp"
#include "nbeatsx/training/trainer.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <optional>

namespace nbeatsx {

/// A trained model together with the statistics its inputs were scaled with.
struct FittedModel {
    TrainResult result;
    NormalizationStats stats;
    std::vector<HourRange> early_stop;
    std::size_t fit_windows = 0;
    std::size_t early_stop_windows = 0;
};

/// Day-ahead forecast issued at `origin` (the first forecast hour), in original units.
struct DailyForecast {
    HourStamp origin = 0;
    std::vector<double> values;
    ForecastDecomposition decomposition;
};

inline void check_compatible(const SeriesFrame& frame, const ModelConfig& mcfg) {
    if (frame.n_covariates() != mcfg.n_covariates) {
        throw ConfigError("model expects " + std::to_string(mcfg.n_covariates) + " covariates, frame has " +
                          std::to_string(frame.n_covariates()));
    }
}

/// Trains on rows [0, end): normalisation, early-stop weeks and windows only
/// see that history. `init` warm-starts from earlier parameters.
inline FittedModel fit_history(const SeriesFrame& frame, std::size_t end, const TrainConfig& cfg,
                               const ModelConfig& mcfg, const Model* init = nullptr) {
    validate(cfg);
    check_compatible(frame, mcfg);
    const std::size_t L = mcfg.input_size, H = mcfg.horizon;
    if (end > frame.size()) throw DataError("fit: history end beyond the frame");
    if (end < L + H) throw DataError("fit: insufficient history, need at least " + std::to_string(L + H) + " hours");

    FittedModel out{TrainResult{init ? *init : Model(mcfg), {}, 0, 0, false}, {}, {}, 0, 0};
    out.stats = fit_normalization(frame, {0, end}, cfg.normalization);

    SeriesFrame visible = frame.slice(0, end);
    out.early_stop = early_stop_weeks(visible, {0, end}, cfg.early_stop_mode, cfg.early_stop_weeks, L,
                                      derive_seed(cfg.seed, 7));
    const auto data = PreparedSeries::from(visible, out.stats);
    const WindowSet fit(data, L, H, fit_window_starts(end, L, H, cfg.stride, out.early_stop));
    const WindowSet early(data, L, H, early_stop_window_starts(out.early_stop, L, H));
    out.fit_windows = fit.size();
    out.early_stop_windows = early.size();
    out.result = train(std::move(out.result.model), fit, early, cfg);
    return out;
}

/// Forecast for the H hours starting at row `origin`. Reads targets before
/// `origin` and covariates through origin + H - 1 only.
inline DailyForecast forecast_at(const Model& model, const NormalizationStats& stats, const SeriesFrame& frame,
                                 std::size_t origin) {
    const ModelConfig& mcfg = model.config();
    check_compatible(frame, mcfg);
    const std::size_t L = mcfg.input_size, H = mcfg.horizon, nx = mcfg.n_covariates;
    if (origin < L) throw DataError("forecast: origin has fewer than L hours of history");
    if (origin + H > frame.size()) throw DataError("forecast: covariates do not reach the end of the horizon");
    ModelInput in{Tensor({1, L}), {}};
    for (std::size_t t = 0; t < L; ++t) in.y_back[t] = stats.target.apply(frame.target[origin - L + t]);
    if (nx > 0) {
        in.covariates = Tensor({1, L + H, nx});
        for (std::size_t t = 0; t < L + H; ++t)
            for (std::size_t c = 0; c < nx; ++c) {
                in.covariates[t * nx + c] = stats.covariates[c].apply(frame.covariates[c][origin - L + t]);
            }
    }
    const Prediction p = predict(model, in);
    std::vector<std::vector<double>> comps;
    for (const Tensor& c : p.components) comps.emplace_back(c.data().begin(), c.data().end());
    const ColumnStats target = stats.target;
    DailyForecast d;
    d.origin = frame.timestamps[origin];
    d.decomposition =
        decompose(mcfg, comps, frame.target[origin - 1], [target](double z) { return target.invert(z); });
    d.values = d.decomposition.forecast;
    return d;
}

/// Rolling forecasts for consecutive days with a fixed model.
inline std::vector<DailyForecast> forecast_days(const Model& model, const NormalizationStats& stats,
                                                const SeriesFrame& frame, std::size_t first_origin,
                                                std::size_t days) {
    std::vector<DailyForecast> out;
    for (std::size_t d = 0; d < days; ++d) out.push_back(forecast_at(model, stats, frame, first_origin + d * kHoursPerDay));
    return out;
}

struct RecalibrationResult {
    std::vector<DailyForecast> forecasts;
    std::optional<Model> last_model;
    NormalizationStats last_stats;
    std::vector<double> seconds_per_day;
    std::vector<TrainingCurves> curves;
};

/// Retrains before every test day on all data preceding it, then forecasts that day.
inline RecalibrationResult recalibrate_daily(const SeriesFrame& frame, const TrainConfig& cfg,
                                             const ModelConfig& mcfg, HourStamp test_start, std::size_t test_days,
                                             const std::function<void(std::size_t, const DailyForecast&)>& on_day = {}) {
    if (test_days == 0) throw ConfigError("recalibrate: test_days must be positive");
    if (hour_of_day(test_start) != 0) throw ConfigError("recalibrate: test start must be a midnight");
    const std::size_t first = frame.index_of(test_start);
    if (first + (test_days - 1) * kHoursPerDay + mcfg.horizon > frame.size()) {
        throw DataError("recalibrate: frame ends before the last test day's horizon");
    }
    RecalibrationResult out;
    for (std::size_t d = 0; d < test_days; ++d) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t origin = first + d * kHoursPerDay;
        TrainConfig day_cfg = cfg;
        day_cfg.seed = derive_seed(cfg.seed, 100 + d);
        const Model* init = cfg.warm_start && out.last_model ? &*out.last_model : nullptr;
        FittedModel fitted = fit_history(frame, origin, day_cfg, mcfg, init);
        DailyForecast f = forecast_at(fitted.result.model, fitted.stats, frame, origin);
        out.seconds_per_day.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        out.curves.push_back(std::move(fitted.result.curves));
        out.last_model = std::move(fitted.result.model);
        out.last_stats = fitted.stats;
        if (on_day) on_day(d, f);
        out.forecasts.push_back(std::move(f));
    }
    return out;
}

}  // namespace nbeatsx
