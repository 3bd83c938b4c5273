#include "nbeatsx/data/calendar.hpp"
#include "nbeatsx/data/frame.hpp"
#include "nbeatsx/data/split.hpp"
#include "nbeatsx/data/synth.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace nbeatsx;

namespace {

std::string hourly_csv(HourStamp start, std::size_t rows, bool with_load = true) {
    std::ostringstream os;
    os << "timestamp,price" << (with_load ? ",load" : "") << "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        os << format_timestamp(start + static_cast<HourStamp>(i)) << ',' << format_number(10.0 + 0.5 * i);
        if (with_load) os << ',' << format_number(100.0 - 0.25 * i);
        os << '\n';
    }
    return os.str();
}

SeriesFrame parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

template <class E>
std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const E& e) {
        return e.line();
    }
    ADD_FAILURE() << "no error raised";
    return 0;
}

}  // namespace

TEST(Timestamp, ParsesVariantsAndFormatsCanonically) {
    const HourStamp t = make_hour_stamp(2018, 12, 24, 23);
    EXPECT_EQ(parse_timestamp("2018-12-24T23:00:00"), t);
    EXPECT_EQ(parse_timestamp("2018-12-24 23:00"), t);
    EXPECT_EQ(parse_timestamp("2018-12-24"), t - 23);
    EXPECT_EQ(format_timestamp(t), "2018-12-24T23:00:00");
    EXPECT_EQ(format_date(t), "2018-12-24");
    EXPECT_FALSE(parse_timestamp("2018-12-24T23:30:00"));
    EXPECT_FALSE(parse_timestamp("2018-02-30T01:00:00"));
    EXPECT_FALSE(parse_timestamp("24/12/2018 23:00"));
    EXPECT_FALSE(parse_timestamp("2018-12-24T24:00:00"));
}

TEST(Timestamp, WeekdayAndHour) {
    EXPECT_EQ(day_of_week(make_hour_stamp(2015, 1, 5)), 0u);   // Monday
    EXPECT_EQ(day_of_week(make_hour_stamp(2015, 1, 11, 23)), 6u);
    EXPECT_EQ(day_of_week(make_hour_stamp(1969, 12, 31, 5)), 2u);  // before the epoch
    EXPECT_EQ(hour_of_day(make_hour_stamp(1969, 12, 31, 5)), 5u);
}

TEST(LoadCsv, WellFormedFile) {
    const std::string text = hourly_csv(make_hour_stamp(2016, 3, 1), 48);
    const SeriesFrame f = parse(text);
    EXPECT_EQ(f.size(), 48u);
    EXPECT_EQ(f.covariate_names, std::vector<std::string>{"load"});
    EXPECT_EQ(f.target[3], 11.5);
    EXPECT_NO_THROW(f.validate());
}

TEST(LoadCsv, RoundTripIsFieldForField) {
    std::string text = hourly_csv(make_hour_stamp(2016, 3, 1), 30);
    SeriesFrame f = parse(text);
    f.target[2] = 0.1 + 0.2;  // needs 17 significant digits
    std::ostringstream a;
    write_csv(a, f);
    const SeriesFrame g = parse(a.str());
    EXPECT_EQ(g, f);
    std::ostringstream b;
    write_csv(b, g);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(text, [&] {
        std::ostringstream c;
        write_csv(c, parse(text));
        return c.str();
    }());
}

TEST(LoadCsv, DuplicatedHourIsAveraged) {
    const std::string text =
        "timestamp,price,load\n"
        "2018-10-28T01:00:00,30,500\n"
        "2018-10-28T02:00:00,40,600\n"
        "2018-10-28T02:00:00,50,700\n"
        "2018-10-28T03:00:00,60,800\n";
    const SeriesFrame f = parse(text);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f.target[1], 45.0);
    EXPECT_EQ(f.covariates[0][1], 650.0);
}

TEST(LoadCsv, ShortGapsInterpolated) {
    const std::string text =
        "timestamp,price\n"
        "2018-03-25T01:00:00,10\n"
        "2018-03-25T03:00:00,20\n"   // one missing hour
        "2018-03-25T07:00:00,40\n"   // three missing hours
        "2018-03-25T08:00:00,\n"     // empty field
        "2018-03-25T09:00:00,44\n";
    const SeriesFrame f = parse(text);
    ASSERT_EQ(f.size(), 9u);
    EXPECT_EQ(f.target[1], 15.0);
    EXPECT_EQ(f.target[3], 25.0);
    EXPECT_EQ(f.target[5], 35.0);
    EXPECT_EQ(f.target[7], 42.0);
}

TEST(LoadCsv, LongGapNamesSpan) {
    const std::string text =
        "timestamp,price\n"
        "2018-03-25T01:00:00,10\n"
        "2018-03-25T07:00:00,20\n";
    try {
        parse(text);
        FAIL();
    } catch (const GapError& e) {
        EXPECT_EQ(e.line(), 3u);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("5 hours"), std::string::npos) << msg;
        EXPECT_NE(msg.find("2018-03-25T02:00:00"), std::string::npos) << msg;
        EXPECT_NE(msg.find("2018-03-25T06:00:00"), std::string::npos) << msg;
    }
}

TEST(LoadCsv, DistinctErrorsCarryLine) {
    EXPECT_EQ(error_line<MalformedRowError>("timestamp,price\n2018-01-01T00:00:00,1\n2018-01-01X01,2\n"), 3u);
    EXPECT_EQ(error_line<MalformedRowError>("timestamp,price\n2018-01-01T00:00:00,abc\n"), 2u);
    EXPECT_EQ(error_line<MalformedRowError>("timestamp,price,load\n2018-01-01T00:00:00,1\n"), 2u);
    EXPECT_EQ(error_line<OrderError>(
                  "timestamp,price\n2018-01-01T05:00:00,1\n2018-01-01T06:00:00,1\n2018-01-01T02:00:00,1\n"),
              4u);
    EXPECT_EQ(error_line<GapError>("timestamp,price\n2018-01-01T00:00:00,1\n2018-01-01T01:00:00,\n"), 2u);
    EXPECT_THROW(parse("time,price\n"), MalformedRowError);
}

TEST(Calendar, MondayMidnightAndColumnCount) {
    const SeriesFrame f = parse(hourly_csv(make_hour_stamp(2015, 1, 5), 24 * 15));
    const SeriesFrame g = calendar_features(f);
    ASSERT_EQ(g.n_covariates(), f.n_covariates() + 8);
    EXPECT_EQ(g.covariates[g.covariate_index("dow_mon")][0], 1.0);
    for (const char* d : {"dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat", "dow_sun"}) {
        EXPECT_EQ(g.covariates[g.covariate_index(d)][0], 0.0);
    }
    EXPECT_EQ(g.covariates[g.covariate_index("hour")][0], 0.0);
    EXPECT_EQ(g.covariates[g.covariate_index("hour")][13], 13.0);
    for (std::size_t i = 0; i + 168 < g.size(); ++i)
        for (std::size_t c = 1; c < g.n_covariates(); ++c) ASSERT_EQ(g.covariates[c][i], g.covariates[c][i + 168]);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0;
        for (const auto& d : kDayColumns) s += g.covariates[g.covariate_index(d)][i];
        ASSERT_EQ(s, 1.0);
    }
    EXPECT_THROW(calendar_features(g), DataError);
}

TEST(Split, SixYearsGiveThreeOneTwo) {
    const auto s = synth_generate(6 * 364, 1);
    const FrameSplit split = split_frame(s.frame, SplitSpec{});
    EXPECT_EQ(split.train.size() / 24, 3u * 364u);
    EXPECT_EQ(split.validation.size() / 24, 364u);
    EXPECT_EQ(split.test.size() / 24, 728u);
    EXPECT_EQ(split.test.end, s.frame.size());
    EXPECT_EQ(split.early_stop.size(), 42u);
}

TEST(Split, RandomWeeksDeterministicMondayAligned) {
    const auto s = synth_generate(3 * 364, 2);
    SplitSpec spec{2 * 364, 182, 182, EarlyStopMode::random_weeks, 42, 168, 77};
    const auto a = split_frame(s.frame, spec);
    const auto b = split_frame(s.frame, spec);
    EXPECT_EQ(a.early_stop, b.early_stop);
    spec.seed = 78;
    EXPECT_FALSE(split_frame(s.frame, spec).early_stop == a.early_stop);
    for (const auto& w : a.early_stop) {
        EXPECT_EQ(w.size(), 168u);
        EXPECT_GE(w.begin, 168u);
        EXPECT_EQ(day_of_week(s.frame.timestamps[w.begin]), 0u);
        EXPECT_EQ(hour_of_day(s.frame.timestamps[w.begin]), 0u);
    }
}

TEST(Split, PartitionProperty) {
    const auto s = synth_generate(3 * 364 + 10, 3);
    for (EarlyStopMode mode : {EarlyStopMode::random_weeks, EarlyStopMode::trailing_weeks}) {
        SplitSpec spec{2 * 364, 182, 182, mode, 42, 0, 5};
        const auto split = split_frame(s.frame, spec);
        std::vector<int> role(s.frame.size(), 0);
        for (const auto& r : split.fit())
            for (std::size_t i = r.begin; i < r.end; ++i) role[i] += 1;
        for (const auto& r : split.early_stop)
            for (std::size_t i = r.begin; i < r.end; ++i) {
                EXPECT_TRUE(split.train.contains(i));
                role[i] += 1;
            }
        for (std::size_t i = split.validation.begin; i < split.validation.end; ++i) role[i] += 1;
        for (std::size_t i = split.test.begin; i < split.test.end; ++i) role[i] += 1;
        for (std::size_t i = 0; i < split.test.end; ++i) ASSERT_EQ(role[i], 1) << i;
        EXPECT_LT(split.train.end, split.validation.end);
        EXPECT_EQ(split.validation.end, split.test.begin);
        EXPECT_EQ(split.train.end % 24, 0u);
        if (mode == EarlyStopMode::trailing_weeks) {
            EXPECT_EQ(split.early_stop.back().end, split.train.end);
        }
    }
}

TEST(Split, InsufficientCoverage) {
    const auto s = synth_generate(100, 3);
    EXPECT_THROW(split_frame(s.frame, SplitSpec{}), DataError);
    EXPECT_THROW(split_frame(s.frame, SplitSpec{80, 10, 10, EarlyStopMode::random_weeks, 42, 0, 1}), DataError);
    EXPECT_THROW(split_frame(s.frame.slice(1, 2400), SplitSpec{50, 10, 10, EarlyStopMode::trailing_weeks, 2, 0, 1}),
                 DataError);
}

TEST(Synth, NoiselessWithoutExogIsTrendPlusSeasonality) {
    SynthParams p;
    p.sigma = 0;
    p.c = 0;
    p.d = 0;
    const auto s = synth_generate(60, 9, p);
    for (std::size_t i = 0; i < s.frame.size(); ++i) ASSERT_EQ(s.frame.target[i], s.trend[i] + s.seasonality[i]);
}

TEST(Synth, ComponentsSumExactlyAndSeedIsReproducible) {
    const auto a = synth_generate(90, 4);
    const auto b = synth_generate(90, 4);
    EXPECT_EQ(a.frame, b.frame);
    EXPECT_FALSE(synth_generate(90, 5).frame == a.frame);
    for (std::size_t i = 0; i < a.frame.size(); ++i) {
        ASSERT_EQ(a.frame.target[i], ((a.trend[i] + a.seasonality[i]) + a.exogenous[i]) + a.noise[i]);
    }
    EXPECT_EQ(day_of_week(a.frame.timestamps[0]), 0u);
    EXPECT_THROW(synth_generate(59, 1), ConfigError);
}

TEST(Synth, Lag24AutocorrelationAndExogShare) {
    const auto s = synth_generate(2 * 364, 11);
    const auto& y = s.frame.target;
    const std::size_t n = y.size();
    double mean = 0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
        den += (y[i] - mean) * (y[i] - mean);
        if (i + 24 < n) num += (y[i] - mean) * (y[i + 24] - mean);
    }
    EXPECT_GT(num / den, 0.5);

    auto variance = [](const std::vector<double>& v) {
        double m = 0, q = 0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        for (double x : v) q += (x - m) * (x - m);
        return q / static_cast<double>(v.size());
    };
    const double share = variance(s.exogenous) / variance(y);
    EXPECT_GT(share, 0.3);
    EXPECT_LT(share, 0.5);
}

TEST(Synth, ComponentsCsvHasOneColumnPerComponent) {
    const auto s = synth_generate(60, 1);
    std::ostringstream os;
    write_components_csv(os, s);
    std::istringstream in(os.str());
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "timestamp,trend,seasonality,exogenous,noise");
    EXPECT_EQ(split_fields(first).size(), 5u);
}
