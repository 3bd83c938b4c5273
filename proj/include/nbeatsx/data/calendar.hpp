#pragma once

#include "nbeatsx/data/frame.hpp"

#include <array>
#include <string>

namespace nbeatsx {

inline const std::array<std::string, 7> kDayColumns{"dow_mon", "dow_tue", "dow_wed", "dow_thu",
                                                     "dow_fri", "dow_sat", "dow_sun"};
inline const std::string kHourColumn = "hour";

inline bool is_calendar_column(const std::string& name) {
    if (name == kHourColumn) return true;
    for (const auto& d : kDayColumns)
        if (name == d) return true;
    return false;
}

/// Appends a day-of-week one-hot (7 columns) and the hour of day (0..23).
inline SeriesFrame calendar_features(SeriesFrame f) {
    for (const auto& n : f.covariate_names) {
        if (is_calendar_column(n)) throw DataError("calendar_features: frame already has column '" + n + "'");
    }
    std::array<std::vector<double>, 7> dow;
    for (auto& c : dow) c.assign(f.size(), 0.0);
    std::vector<double> hour(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        dow[day_of_week(f.timestamps[i])][i] = 1.0;
        hour[i] = static_cast<double>(hour_of_day(f.timestamps[i]));
    }
    for (std::size_t d = 0; d < 7; ++d) {
        f.covariate_names.push_back(kDayColumns[d]);
        f.covariates.push_back(std::move(dow[d]));
    }
    f.covariate_names.push_back(kHourColumn);
    f.covariates.push_back(std::move(hour));
    return f;
}

}  // namespace nbeatsx
