#pragma once

#include "nbeatsx/training/recalibration.hpp"

#include <atomic>
#include <exception>
#include <thread>

namespace nbeatsx {

/// One source of ensemble diversity: window stride and early-stop selection.
struct EnsembleVariant {
    std::size_t stride = 24;
    EarlyStopMode mode = EarlyStopMode::random_weeks;

    std::string name() const { return "stride=" + std::to_string(stride) + "/" + std::string(to_string(mode)); }
    friend bool operator==(const EnsembleVariant&, const EnsembleVariant&) = default;
};

inline std::vector<EnsembleVariant> default_variants() {
    return {{1, EarlyStopMode::random_weeks},
            {1, EarlyStopMode::trailing_weeks},
            {24, EarlyStopMode::random_weeks},
            {24, EarlyStopMode::trailing_weeks}};
}

/// Pointwise arithmetic mean of member forecasts. Members must share origins.
/// A running mean keeps identical members exactly equal to their average.
inline std::vector<DailyForecast> average_forecasts(const std::vector<std::vector<DailyForecast>>& members) {
    if (members.empty()) throw ConfigError("ensemble: no members");
    std::vector<DailyForecast> out = members.front();
    for (std::size_t k = 1; k < members.size(); ++k) {
        const auto& m = members[k];
        if (m.size() != out.size()) throw ShapeError("ensemble: members cover different numbers of days");
        const double w = 1.0 / static_cast<double>(k + 1);
        for (std::size_t d = 0; d < out.size(); ++d) {
            if (m[d].origin != out[d].origin) throw ShapeError("ensemble: member origins differ");
            if (m[d].values.size() != out[d].values.size()) throw ShapeError("ensemble: member horizons differ");
            for (std::size_t h = 0; h < out[d].values.size(); ++h) out[d].values[h] += (m[d].values[h] - out[d].values[h]) * w;
            auto& dec = out[d].decomposition;
            const auto& md = m[d].decomposition;
            if (dec.names == md.names) {
                for (std::size_t c = 0; c < dec.components.size(); ++c)
                    for (std::size_t h = 0; h < dec.components[c].size(); ++h) {
                        dec.components[c][h] += (md.components[c][h] - dec.components[c][h]) * w;
                    }
            }
        }
    }
    for (auto& d : out) d.decomposition.forecast = d.values;
    return out;
}

struct EnsembleResult {
    std::vector<EnsembleVariant> variants;
    std::vector<std::vector<DailyForecast>> members;
    std::vector<DailyForecast> combined;
};

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; rethrows the first failure by index.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto guarded = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) guarded(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Daily-recalibrated members, one per variant, averaged pointwise.
/// Members share the model and training seeds; diversity comes from the variants.
inline EnsembleResult ensemble(const SeriesFrame& frame, const TrainConfig& cfg, const ModelConfig& mcfg,
                               HourStamp test_start, std::size_t test_days,
                               std::vector<EnsembleVariant> variants = default_variants(), std::size_t jobs = 1) {
    EnsembleResult out;
    out.variants = std::move(variants);
    out.members.resize(out.variants.size());
    parallel_for(out.variants.size(), jobs, [&](std::size_t i) {
        const EnsembleVariant& v = out.variants[i];
        TrainConfig member = cfg;
        member.stride = v.stride;
        member.early_stop_mode = v.mode;
        try {
            out.members[i] = recalibrate_daily(frame, member, mcfg, test_start, test_days).forecasts;
        } catch (const Error& e) {
            throw TrainingError("ensemble member " + std::to_string(i) + " (" + v.name() + ") failed: " + e.what());
        }
    });
    out.combined = average_forecasts(out.members);
    return out;
}

}  // namespace nbeatsx
