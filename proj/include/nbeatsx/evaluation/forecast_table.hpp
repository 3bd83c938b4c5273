#pragma once

#include "nbeatsx/evaluation/metrics.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace nbeatsx {

/// Daily forecasts keyed by the date of their first hour.
/// CSV layout: origin_date,h00,...,h(H-1).
struct ForecastTable {
    std::vector<HourStamp> origins;
    DayMatrix values;

    std::size_t days() const noexcept { return origins.size(); }
    std::size_t horizon() const noexcept { return values.empty() ? 0 : values.front().size(); }
    friend bool operator==(const ForecastTable&, const ForecastTable&) = default;
};

inline std::string hour_column(std::size_t h) {
    return (h < 10 ? "h0" : "h") + std::to_string(h);
}

inline void write_forecast_csv(std::ostream& os, const ForecastTable& t) {
    os << "origin_date";
    for (std::size_t h = 0; h < t.horizon(); ++h) os << ',' << hour_column(h);
    os << '\n';
    for (std::size_t d = 0; d < t.days(); ++d) {
        os << format_date(t.origins[d]);
        for (double v : t.values[d]) os << ',' << format_number(v);
        os << '\n';
    }
}

inline void write_forecast_csv(const std::filesystem::path& path, const ForecastTable& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    write_forecast_csv(os, t);
}

inline ForecastTable read_forecast_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw MalformedRowError(1, "forecast file is empty");
    const auto header = split_fields(line);
    if (header.size() < 2 || header[0] != "origin_date") {
        throw MalformedRowError(1, "forecast header must start with origin_date");
    }
    for (std::size_t h = 1; h < header.size(); ++h) {
        if (header[h] != hour_column(h - 1)) throw MalformedRowError(1, "unexpected column " + std::string(header[h]));
    }
    ForecastTable t;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) throw MalformedRowError(line_no, "wrong number of fields");
        const auto origin = parse_timestamp(fields[0]);
        if (!origin) throw MalformedRowError(line_no, "bad date '" + std::string(fields[0]) + "'");
        if (!t.origins.empty() && *origin <= t.origins.back()) throw OrderError(line_no, "origins must increase");
        std::vector<double> row;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            const auto v = parse_number(fields[i]);
            if (!v) throw MalformedRowError(line_no, "bad number '" + std::string(fields[i]) + "'");
            row.push_back(*v);
        }
        t.origins.push_back(*origin);
        t.values.push_back(std::move(row));
    }
    return t;
}

inline ForecastTable read_forecast_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_forecast_csv(in);
}

/// Rows of `frame` at which each forecast's first hour falls.
inline std::vector<std::size_t> origin_rows(const SeriesFrame& frame, const ForecastTable& t) {
    std::vector<std::size_t> rows;
    for (HourStamp o : t.origins) rows.push_back(frame.index_of(o));
    return rows;
}

/// Actuals aligned with a forecast table.
inline DayMatrix aligned_actuals(const SeriesFrame& frame, const ForecastTable& t) {
    DayMatrix out;
    for (std::size_t d = 0; d < t.days(); ++d) {
        const std::size_t row = frame.index_of(t.origins[d]);
        if (row + t.horizon() > frame.size()) throw DataError("actuals missing for " + format_date(t.origins[d]));
        out.emplace_back(frame.target.begin() + static_cast<std::ptrdiff_t>(row),
                         frame.target.begin() + static_cast<std::ptrdiff_t>(row + t.horizon()));
    }
    return out;
}

/// Similar-day forecasts aligned with a forecast table (24-hour horizon).
inline DayMatrix aligned_naive(const SeriesFrame& frame, const ForecastTable& t) {
    DayMatrix out;
    for (HourStamp o : t.origins) out.push_back(naive_forecast(frame, frame.index_of(o), 1).front());
    return out;
}

}  // namespace nbeatsx
