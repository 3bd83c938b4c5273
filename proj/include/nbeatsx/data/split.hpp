#pragma once

#include "nbeatsx/data/frame.hpp"
#include "nbeatsx/numerics/random.hpp"

#include <algorithm>
#include <optional>
#include <string_view>
#include <vector>

namespace nbeatsx {

inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kHoursPerWeek = 168;
inline constexpr std::size_t kDaysPerSplitYear = 364;

enum class EarlyStopMode { random_weeks, trailing_weeks };

inline std::string_view to_string(EarlyStopMode m) {
    return m == EarlyStopMode::random_weeks ? "random_weeks" : "trailing_weeks";
}

inline std::optional<EarlyStopMode> parse_early_stop_mode(std::string_view s) {
    if (s == "random_weeks" || s == "random") return EarlyStopMode::random_weeks;
    if (s == "trailing_weeks" || s == "trailing") return EarlyStopMode::trailing_weeks;
    return std::nullopt;
}

/// Half-open row range [begin, end).
struct HourRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t row) const noexcept { return row >= begin && row < end; }
    friend bool operator==(const HourRange&, const HourRange&) = default;
};

/// Day counts of the chronological split; years are 52 whole weeks.
struct SplitSpec {
    std::size_t train_days = 3 * kDaysPerSplitYear;
    std::size_t validation_days = kDaysPerSplitYear;
    std::size_t test_days = 2 * kDaysPerSplitYear;
    EarlyStopMode mode = EarlyStopMode::random_weeks;
    std::size_t early_stop_weeks = 42;
    std::size_t min_history_hours = 0;  // early-stop weeks start at or after this row
    std::uint64_t seed = 0;
};

/// Row roles. Early-stop weeks lie inside `train`; `fit` lists the training
/// rows left for gradient batches once they are carved out.
struct FrameSplit {
    HourRange train;
    HourRange validation;
    HourRange test;
    std::vector<HourRange> early_stop;

    bool in_early_stop(std::size_t row) const {
        for (const auto& w : early_stop)
            if (w.contains(row)) return true;
        return false;
    }

    std::vector<HourRange> fit() const {
        std::vector<HourRange> out;
        std::size_t cursor = train.begin;
        for (const auto& w : early_stop) {
            if (w.begin > cursor) out.push_back({cursor, w.begin});
            cursor = std::max(cursor, w.end);
        }
        if (cursor < train.end) out.push_back({cursor, train.end});
        return out;
    }
};

/// Early-stop weeks inside `span`. Random mode draws `count` distinct
/// Monday-00:00 weeks; trailing mode takes the last `count` * 168 hours.
inline std::vector<HourRange> early_stop_weeks(const SeriesFrame& f, HourRange span, EarlyStopMode mode,
                                               std::size_t count, std::size_t min_history, std::uint64_t seed) {
    if (count == 0) return {};
    const std::size_t first = std::max(span.begin, min_history);
    if (mode == EarlyStopMode::trailing_weeks) {
        if (span.end < first + count * kHoursPerWeek) {
            throw DataError("split: training span too short for " + std::to_string(count) + " trailing weeks");
        }
        std::vector<HourRange> out;
        for (std::size_t k = count; k > 0; --k) {
            const std::size_t b = span.end - k * kHoursPerWeek;
            out.push_back({b, b + kHoursPerWeek});
        }
        return out;
    }
    std::vector<std::size_t> candidates;
    for (std::size_t r = first; r + kHoursPerWeek <= span.end; ++r) {
        if (day_of_week(f.timestamps[r]) == 0 && hour_of_day(f.timestamps[r]) == 0) {
            candidates.push_back(r);
            r += kHoursPerWeek - 1;
        }
    }
    if (candidates.size() < count) {
        throw DataError("split: only " + std::to_string(candidates.size()) + " whole Monday weeks available, " +
                        std::to_string(count) + " requested");
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(count);
    std::sort(candidates.begin(), candidates.end());
    std::vector<HourRange> out;
    for (std::size_t r : candidates) out.push_back({r, r + kHoursPerWeek});
    return out;
}

/// Chronological split anchored at the first row, which must be a midnight.
/// Rows after the test span, if any, are left unassigned.
inline FrameSplit split_frame(const SeriesFrame& f, const SplitSpec& spec) {
    if (f.size() == 0 || hour_of_day(f.timestamps.front()) != 0) {
        throw DataError("split: frame must start at 00:00");
    }
    const std::size_t need = (spec.train_days + spec.validation_days + spec.test_days) * kHoursPerDay;
    if (f.size() < need) {
        throw DataError("split: frame covers " + std::to_string(f.size() / kHoursPerDay) + " days, split needs " +
                        std::to_string(need / kHoursPerDay));
    }
    FrameSplit s;
    s.train = {0, spec.train_days * kHoursPerDay};
    s.validation = {s.train.end, s.train.end + spec.validation_days * kHoursPerDay};
    s.test = {s.validation.end, s.validation.end + spec.test_days * kHoursPerDay};
    s.early_stop = early_stop_weeks(f, s.train, spec.mode, spec.early_stop_weeks, spec.min_history_hours, spec.seed);
    return s;
}

}  // namespace nbeatsx
