#pragma once

#include "nbeatsx/data/frame.hpp"
#include "nbeatsx/numerics/random.hpp"

#include <cmath>
#include <numbers>

namespace nbeatsx {

/// y = a (t/T)^2 + b sin(2 pi hour / 24) + c x + d x weekend + sigma eps,
/// x = AR(1) + daily cycle (peaking six hours after y's) + weekend shift.
/// The defaults put roughly 40% of the target variance in the c, d terms.
struct SynthParams {
    double a = 20.0;
    double b = 10.0;
    double c = 5.0;
    double d = 2.0;
    double sigma = 1.0;
    double phi = 0.9;
    double x_innovation_sd = 0.5;
    double x_daily_amplitude = 1.0;
    double x_weekend_shift = 1.0;
    HourStamp start = make_hour_stamp(2015, 1, 5);  // a Monday
};

struct SyntheticSeries {
    SeriesFrame frame;  // price + "load"
    std::vector<double> trend;
    std::vector<double> seasonality;
    std::vector<double> exogenous;
    std::vector<double> noise;
};

inline SyntheticSeries synth_generate(std::size_t days, std::uint64_t seed, const SynthParams& p = {}) {
    if (days < 60) throw ConfigError("synth_generate: at least 60 days required");
    if (!(std::abs(p.phi) < 1.0)) throw ConfigError("synth_generate: |phi| must be below 1");
    if (hour_of_day(p.start) != 0) throw ConfigError("synth_generate: start must be a midnight");
    const std::size_t n = days * 24;
    Rng rng(seed);
    SyntheticSeries s;
    s.frame.covariate_names = {"load"};
    s.frame.covariates.resize(1);
    auto& x = s.frame.covariates[0];
    x.resize(n);
    s.frame.timestamps.resize(n);
    s.frame.target.resize(n);
    s.trend.resize(n);
    s.seasonality.resize(n);
    s.exogenous.resize(n);
    s.noise.resize(n);

    const double two_pi = 2.0 * std::numbers::pi;
    double ar = p.x_innovation_sd / std::sqrt(1.0 - p.phi * p.phi) * standard_normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const HourStamp t = p.start + static_cast<HourStamp>(i);
        const double hour = static_cast<double>(hour_of_day(t));
        const double weekend = day_of_week(t) >= 5 ? 1.0 : 0.0;
        if (i > 0) ar = p.phi * ar + p.x_innovation_sd * standard_normal(rng);
        const double eps = standard_normal(rng);
        x[i] = ar + p.x_daily_amplitude * std::sin(two_pi * (hour - 6.0) / 24.0) + p.x_weekend_shift * weekend;
        const double u = static_cast<double>(i) / static_cast<double>(n);
        s.trend[i] = p.a * u * u;
        s.seasonality[i] = p.b * std::sin(two_pi * hour / 24.0);
        s.exogenous[i] = p.c * x[i] + p.d * x[i] * weekend;
        s.noise[i] = p.sigma * eps;
        s.frame.timestamps[i] = t;
        s.frame.target[i] = ((s.trend[i] + s.seasonality[i]) + s.exogenous[i]) + s.noise[i];
    }
    return s;
}

/// Ground-truth components: timestamp,trend,seasonality,exogenous,noise.
inline void write_components_csv(std::ostream& out, const SyntheticSeries& s) {
    out << "timestamp,trend,seasonality,exogenous,noise\n";
    for (std::size_t i = 0; i < s.frame.size(); ++i) {
        out << format_timestamp(s.frame.timestamps[i]) << ',' << format_number(s.trend[i]) << ','
            << format_number(s.seasonality[i]) << ',' << format_number(s.exogenous[i]) << ','
            << format_number(s.noise[i]) << '\n';
    }
}

inline void write_components_csv(const std::filesystem::path& path, const SyntheticSeries& s) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_components_csv(out, s);
}

}  // namespace nbeatsx
