#pragma once

#include "nbeatsx/data/timestamp.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace nbeatsx {

/// A field that is not a number or a timestamp. Carries the 1-based file line.
class MalformedRowError : public DataError {
public:
    MalformedRowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A timestamp earlier than the one before it.
class OrderError : public DataError {
public:
    OrderError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// More consecutive missing hours than interpolation is allowed to fill.
class GapError : public DataError {
public:
    GapError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Longest run of missing hours filled by linear interpolation.
inline constexpr std::size_t kMaxInterpolatedGap = 3;

/// Hourly series: target plus named covariate columns, gap-free.
struct SeriesFrame {
    std::vector<HourStamp> timestamps;
    std::vector<double> target;
    std::vector<std::string> covariate_names;
    std::vector<std::vector<double>> covariates;  // one vector per column

    std::size_t size() const noexcept { return timestamps.size(); }
    std::size_t n_covariates() const noexcept { return covariates.size(); }

    std::size_t covariate_index(const std::string& name) const {
        for (std::size_t i = 0; i < covariate_names.size(); ++i)
            if (covariate_names[i] == name) return i;
        throw DataError("unknown covariate '" + name + "'");
    }

    /// Throws DataError unless the frame is hourly, gap-free and finite.
    void validate() const {
        if (target.size() != timestamps.size()) throw DataError("frame: target length differs from timestamps");
        if (covariates.size() != covariate_names.size()) throw DataError("frame: covariate names mismatch");
        for (const auto& c : covariates)
            if (c.size() != timestamps.size()) throw DataError("frame: covariate length differs from timestamps");
        for (std::size_t i = 1; i < timestamps.size(); ++i) {
            if (timestamps[i] != timestamps[i - 1] + 1) {
                throw DataError("frame: cadence breaks at " + format_timestamp(timestamps[i]));
            }
        }
        for (std::size_t i = 0; i < size(); ++i) {
            if (!std::isfinite(target[i])) throw DataError("frame: non-finite target at " + format_timestamp(timestamps[i]));
            for (std::size_t c = 0; c < covariates.size(); ++c)
                if (!std::isfinite(covariates[c][i])) {
                    throw DataError("frame: non-finite " + covariate_names[c] + " at " + format_timestamp(timestamps[i]));
                }
        }
    }

    /// Rows [begin, end).
    SeriesFrame slice(std::size_t begin, std::size_t end) const {
        if (begin > end || end > size()) throw DataError("frame: slice out of range");
        SeriesFrame out;
        out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                              timestamps.begin() + static_cast<std::ptrdiff_t>(end));
        out.target.assign(target.begin() + static_cast<std::ptrdiff_t>(begin),
                          target.begin() + static_cast<std::ptrdiff_t>(end));
        out.covariate_names = covariate_names;
        for (const auto& c : covariates) {
            out.covariates.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(begin),
                                        c.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return out;
    }

    /// Row index of an instant, or throws when outside the frame.
    std::size_t index_of(HourStamp t) const {
        if (empty_or_outside(t)) throw DataError("frame: " + format_timestamp(t) + " is outside the frame");
        return static_cast<std::size_t>(t - timestamps.front());
    }

    friend bool operator==(const SeriesFrame&, const SeriesFrame&) = default;

private:
    bool empty_or_outside(HourStamp t) const {
        return timestamps.empty() || t < timestamps.front() || t > timestamps.back();
    }
};

/// Shortest decimal form that round-trips to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("format_number: conversion failed");
    return std::string(buf, end);
}

inline std::optional<double> parse_number(std::string_view s) {
    while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

namespace detail {

/// Linear interpolation of NaN runs of length <= kMaxInterpolatedGap inside a column.
inline void fill_missing(std::vector<double>& col, const std::vector<std::size_t>& lines, const std::string& name) {
    std::size_t i = 0;
    while (i < col.size()) {
        if (!std::isnan(col[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < col.size() && std::isnan(col[j])) ++j;
        const std::size_t run = j - i;
        if (i == 0 || j == col.size()) {
            throw GapError(lines[i == 0 ? 0 : i - 1], "column '" + name + "' has " + std::to_string(run) +
                                                          " missing hours at the edge of the file");
        }
        if (run > kMaxInterpolatedGap) {
            throw GapError(lines[i], "column '" + name + "' has " + std::to_string(run) +
                                         " consecutive missing hours");
        }
        const double a = col[i - 1], b = col[j];
        for (std::size_t k = i; k < j; ++k) {
            const double w = static_cast<double>(k - i + 1) / static_cast<double>(run + 1);
            col[k] = a + w * (b - a);
        }
        i = j;
    }
}

}  // namespace detail

/// Reads `timestamp,price,<covariates...>`.
///
/// Repeated hours (DST fall-back) are averaged, up to three missing hours
/// (DST spring-forward, empty fields) are linearly interpolated; longer gaps,
/// backwards timestamps and malformed fields raise errors naming the line.
inline SeriesFrame read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw MalformedRowError(1, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.size() < 2 || header[0] != "timestamp" || header[1] != "price") {
        throw MalformedRowError(1, "header must start with 'timestamp,price'");
    }
    SeriesFrame f;
    for (std::size_t c = 2; c < header.size(); ++c) f.covariate_names.emplace_back(header[c]);
    const std::size_t ncol = header.size();
    f.covariates.resize(ncol - 2);

    std::vector<std::size_t> lines;  // source line of each emitted row
    std::vector<std::size_t> counts;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != ncol) {
            throw MalformedRowError(line_no, "expected " + std::to_string(ncol) + " fields, got " +
                                                 std::to_string(fields.size()));
        }
        const auto t = parse_timestamp(fields[0]);
        if (!t) throw MalformedRowError(line_no, "malformed timestamp '" + std::string(fields[0]) + "'");
        std::vector<double> values(ncol - 1);
        for (std::size_t c = 1; c < ncol; ++c) {
            if (fields[c].empty()) {
                values[c - 1] = nan;
                continue;
            }
            const auto v = parse_number(fields[c]);
            if (!v) {
                throw MalformedRowError(line_no, "malformed value '" + std::string(fields[c]) + "' in column '" +
                                                     std::string(header[c]) + "'");
            }
            values[c - 1] = *v;
        }
        auto column = [&](std::size_t c) -> std::vector<double>& { return c == 0 ? f.target : f.covariates[c - 1]; };
        if (!f.timestamps.empty() && *t == f.timestamps.back()) {
            // Repeated hour: running average, ignoring empty fields.
            const std::size_t n = counts.back();
            for (std::size_t c = 0; c + 1 < ncol; ++c) {
                double& dst = column(c).back();
                if (std::isnan(values[c])) continue;
                dst = std::isnan(dst) ? values[c] : dst + (values[c] - dst) / static_cast<double>(n + 1);
            }
            counts.back() += 1;
            continue;
        }
        if (!f.timestamps.empty() && *t < f.timestamps.back()) {
            throw OrderError(line_no, "timestamp " + format_timestamp(*t) + " precedes " +
                                          format_timestamp(f.timestamps.back()));
        }
        if (!f.timestamps.empty() && *t > f.timestamps.back() + 1) {
            const auto missing = static_cast<std::size_t>(*t - f.timestamps.back() - 1);
            if (missing > kMaxInterpolatedGap) {
                throw GapError(line_no, "gap of " + std::to_string(missing) + " hours from " +
                                            format_timestamp(f.timestamps.back() + 1) + " to " +
                                            format_timestamp(*t - 1));
            }
            for (std::size_t k = 0; k < missing; ++k) {
                f.timestamps.push_back(f.timestamps.back() + 1);
                for (std::size_t c = 0; c + 1 < ncol; ++c) column(c).push_back(nan);
                lines.push_back(line_no);
                counts.push_back(1);
            }
        }
        f.timestamps.push_back(*t);
        for (std::size_t c = 0; c + 1 < ncol; ++c) column(c).push_back(values[c]);
        lines.push_back(line_no);
        counts.push_back(1);
    }
    if (f.timestamps.empty()) throw MalformedRowError(line_no, "no data rows");
    detail::fill_missing(f.target, lines, "price");
    for (std::size_t c = 0; c < f.covariates.size(); ++c) detail::fill_missing(f.covariates[c], lines, f.covariate_names[c]);
    f.validate();
    return f;
}

inline SeriesFrame load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_csv(in);
}

/// Canonical CSV: ISO timestamps, shortest round-trip numbers.
inline void write_csv(std::ostream& out, const SeriesFrame& f) {
    out << "timestamp,price";
    for (const auto& n : f.covariate_names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < f.size(); ++i) {
        out << format_timestamp(f.timestamps[i]) << ',' << format_number(f.target[i]);
        for (const auto& c : f.covariates) out << ',' << format_number(c[i]);
        out << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const SeriesFrame& f) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_csv(out, f);
}

}  // namespace nbeatsx
