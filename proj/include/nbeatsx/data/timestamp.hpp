#pragma once

#include "nbeatsx/error.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nbeatsx {

/// Hourly instant in civil (wall-clock) time, counted in hours since 1970-01-01T00.
using HourStamp = std::int64_t;

inline HourStamp make_hour_stamp(int year, unsigned month, unsigned day, unsigned hour = 0) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok() || hour > 23) throw DataError("invalid calendar date");
    return static_cast<HourStamp>(std::chrono::sys_days{ymd}.time_since_epoch().count()) * 24 + hour;
}

inline std::int64_t day_index(HourStamp t) { return t >= 0 ? t / 24 : -((-t + 23) / 24); }
inline unsigned hour_of_day(HourStamp t) { return static_cast<unsigned>(t - day_index(t) * 24); }

/// 0 = Monday ... 6 = Sunday.
inline unsigned day_of_week(HourStamp t) {
    const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{day_index(t)}}};
    return wd.iso_encoding() - 1;
}

inline std::chrono::year_month_day civil_date(HourStamp t) {
    return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{day_index(t)}}};
}

namespace detail {

inline void put_digits(std::string& out, unsigned v, int width) {
    char buf[8];
    for (int i = width - 1; i >= 0; --i) {
        buf[i] = static_cast<char>('0' + v % 10);
        v /= 10;
    }
    out.append(buf, static_cast<std::size_t>(width));
}

inline std::optional<unsigned> take_digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return std::nullopt;
    unsigned v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        v = v * 10 + static_cast<unsigned>(s[i] - '0');
    }
    return v;
}

}  // namespace detail

/// YYYY-MM-DD
inline std::string format_date(HourStamp t) {
    const auto ymd = civil_date(t);
    std::string out;
    detail::put_digits(out, static_cast<unsigned>(static_cast<int>(ymd.year())), 4);
    out += '-';
    detail::put_digits(out, static_cast<unsigned>(ymd.month()), 2);
    out += '-';
    detail::put_digits(out, static_cast<unsigned>(ymd.day()), 2);
    return out;
}

/// Canonical form YYYY-MM-DDTHH:00:00.
inline std::string format_timestamp(HourStamp t) {
    std::string out = format_date(t);
    out += 'T';
    detail::put_digits(out, hour_of_day(t), 2);
    out += ":00:00";
    return out;
}

/// Accepts YYYY-MM-DD[T| ]HH:MM[:SS] on the hour, or a bare YYYY-MM-DD (midnight).
inline std::optional<HourStamp> parse_timestamp(std::string_view s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    const auto y = detail::take_digits(s, 0, 4);
    const auto mo = detail::take_digits(s, 5, 2);
    const auto d = detail::take_digits(s, 8, 2);
    if (!y || !mo || !d || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    unsigned hour = 0;
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || (s.size() != 16 && s.size() != 19) || s[13] != ':') return std::nullopt;
        const auto h = detail::take_digits(s, 11, 2);
        const auto mi = detail::take_digits(s, 14, 2);
        if (!h || !mi || *mi != 0) return std::nullopt;
        if (s.size() == 19) {
            const auto sec = detail::take_digits(s, 17, 2);
            if (s[16] != ':' || !sec || *sec != 0) return std::nullopt;
        }
        hour = *h;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(*y)}, std::chrono::month{*mo},
                                          std::chrono::day{*d}};
    if (!ymd.ok() || hour > 23) return std::nullopt;
    return make_hour_stamp(static_cast<int>(*y), *mo, *d, hour);
}

}  // namespace nbeatsx
