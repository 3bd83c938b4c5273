#include "nbeatsx/evaluation/forecast_table.hpp"
#include "nbeatsx/evaluation/gw.hpp"
#include "nbeatsx/numerics/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace nbeatsx;

namespace {

DayMatrix random_matrix(std::size_t days, std::size_t hours, Rng& rng, double scale = 50.0) {
    DayMatrix m(days, std::vector<double>(hours));
    for (auto& row : m)
        for (double& v : row) v = scale * standard_normal(rng);
    return m;
}

// Straight loops over flattened data, written independently of the library.
struct BruteMetrics {
    double mae, rmae, smape, rmse;
};

BruteMetrics brute(const DayMatrix& y, const DayMatrix& f, const DayMatrix& nv) {
    std::vector<double> ys, fs, ns;
    for (std::size_t d = 0; d < y.size(); ++d)
        for (std::size_t h = 0; h < y[d].size(); ++h) {
            ys.push_back(y[d][h]);
            fs.push_back(f[d][h]);
            ns.push_back(nv[d][h]);
        }
    const double n = static_cast<double>(ys.size());
    double a = 0, s = 0, q = 0, z = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        a += std::fabs(ys[i] - fs[i]);
        q += (ys[i] - fs[i]) * (ys[i] - fs[i]);
        z += std::fabs(ys[i] - ns[i]);
        const double den = std::fabs(ys[i]) + std::fabs(fs[i]);
        s += den == 0 ? 0 : std::fabs(ys[i] - fs[i]) / den;
    }
    return {a / n, a / z, 200.0 * s / n, std::sqrt(q / n)};
}

SeriesFrame three_weeks() {
    SeriesFrame f;
    const HourStamp monday = make_hour_stamp(2021, 3, 1, 0);
    for (std::size_t i = 0; i < 21 * 24; ++i) {
        f.timestamps.push_back(monday + static_cast<HourStamp>(i));
        f.target.push_back(100.0 * static_cast<double>(i / 24) + static_cast<double>(i % 24));
    }
    return f;
}

}  // namespace

// Metrics

TEST(Metrics, PerfectForecastIsZeroEverywhere) {
    Rng rng(1);
    const DayMatrix y = random_matrix(5, 24, rng);
    const DayMatrix naive = random_matrix(5, 24, rng);
    const MetricsReport r = compute_metrics(y, y, naive);
    EXPECT_EQ(r.mae, 0.0);
    EXPECT_EQ(r.rmse, 0.0);
    EXPECT_EQ(r.smape, 0.0);
    EXPECT_EQ(r.rmae, 0.0);
    EXPECT_EQ(r.n_days, 5u);
}

TEST(Metrics, HandComputedTwoHourDay) {
    const MetricsReport r = compute_metrics({{1.0, 2.0}}, {{2.0, 4.0}}, {{0.0, 0.0}});
    EXPECT_DOUBLE_EQ(r.mae, 1.5);
    EXPECT_DOUBLE_EQ(r.rmse, std::sqrt(2.5));
    EXPECT_NEAR(r.smape, 200.0 * (1.0 / 3.0 + 1.0 / 3.0) / 2.0, 1e-12);
    EXPECT_NEAR(r.smape, 66.67, 0.01);
    EXPECT_DOUBLE_EQ(r.rmae, 3.0 / 3.0);
    EXPECT_EQ(r.daily_loss, (std::vector<double>{3.0}));
}

TEST(Metrics, NaiveAgainstItselfHasUnitRelativeError) {
    Rng rng(2);
    const DayMatrix y = random_matrix(4, 24, rng), naive = random_matrix(4, 24, rng);
    EXPECT_DOUBLE_EQ(compute_metrics(y, naive, naive).rmae, 1.0);
}

TEST(Metrics, ZeroNaiveErrorMakesRmaeUndefined) {
    Rng rng(3);
    const DayMatrix y = random_matrix(2, 24, rng), f = random_matrix(2, 24, rng);
    EXPECT_THROW(compute_metrics(y, f, y), DataError);
}

TEST(Metrics, ZeroOverZeroSmapeTermsContributeNothing) {
    const MetricsReport r = compute_metrics({{0.0, 1.0}}, {{0.0, 3.0}}, {{1.0, 1.0}});
    EXPECT_DOUBLE_EQ(r.smape, 200.0 * (0.5) / 2.0);
}

TEST(Metrics, ShapeMismatchesAreRejected) {
    EXPECT_THROW(compute_metrics({{1, 2}}, {{1, 2}, {3, 4}}, {{1, 2}}), ShapeError);
    EXPECT_THROW(compute_metrics({{1, 2}}, {{1}}, {{1, 2}}), ShapeError);
    EXPECT_THROW(compute_metrics({}, {}, {}), ShapeError);
}

TEST(Metrics, MatchBruteForceOnRandomInstances) {
    Rng rng(2718);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t days = 1 + rng() % 30;
        const DayMatrix y = random_matrix(days, 24, rng), f = random_matrix(days, 24, rng),
                        nv = random_matrix(days, 24, rng);
        const MetricsReport r = compute_metrics(y, f, nv);
        const BruteMetrics b = brute(y, f, nv);
        EXPECT_NEAR(r.mae, b.mae, 1e-12);
        EXPECT_NEAR(r.rmae, b.rmae, 1e-12);
        EXPECT_NEAR(r.smape, b.smape, 1e-12);
        EXPECT_NEAR(r.rmse, b.rmse, 1e-12);
    }
}

TEST(Metrics, ScalingProperties) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const double c = 0.01 + 100.0 * uniform01(rng);
        DayMatrix y = random_matrix(7, 24, rng), f = random_matrix(7, 24, rng), nv = random_matrix(7, 24, rng);
        const MetricsReport base = compute_metrics(y, f, nv);
        for (DayMatrix* m : {&y, &f, &nv})
            for (auto& row : *m)
                for (double& v : row) v *= c;
        const MetricsReport scaled = compute_metrics(y, f, nv);
        EXPECT_NEAR(scaled.rmae, base.rmae, 1e-12 * base.rmae);
        EXPECT_NEAR(scaled.mae, c * base.mae, 1e-12 * c * base.mae);
        EXPECT_NEAR(scaled.rmse, c * base.rmse, 1e-12 * c * base.rmse);
        EXPECT_NEAR(scaled.smape, base.smape, 1e-9);
    }
}

TEST(Metrics, SmapeBoundedAndAttainedOnOppositeSigns) {
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        const DayMatrix y = random_matrix(3, 24, rng), f = random_matrix(3, 24, rng), nv = random_matrix(3, 24, rng);
        const double s = compute_metrics(y, f, nv).smape;
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 200.0);
    }
    EXPECT_DOUBLE_EQ(compute_metrics({{2.0, -1.0}}, {{-3.0, 0.5}}, {{0.0, 0.0}}).smape, 200.0);
}

// Naive benchmark

TEST(Naive, WeekdayTableOnThreeWeekFixture) {
    const SeriesFrame f = three_weeks();
    const DayMatrix nv = naive_forecast(f, 7 * 24, 14);
    // Day k of the fixture has values 100 k + hour; the naive copies day k - lag.
    const std::size_t lag_days[7] = {7, 1, 1, 1, 1, 7, 7};  // Mon..Sun
    for (std::size_t d = 0; d < 14; ++d) {
        const std::size_t day = 7 + d;
        const std::size_t source = day - lag_days[day % 7];
        for (std::size_t h = 0; h < 24; ++h) EXPECT_EQ(nv[d][h], 100.0 * source + h) << "day " << day;
    }
}

TEST(Naive, WednesdayCopiesTuesdayAndMondayCopiesLastMonday) {
    const SeriesFrame f = three_weeks();
    const std::size_t wednesday = (7 + 2) * 24, monday = 14 * 24;
    EXPECT_EQ(day_of_week(f.timestamps[wednesday]), 2);
    EXPECT_EQ(naive_forecast(f, wednesday, 1)[0][5], f.target[wednesday - 24 + 5]);
    EXPECT_EQ(naive_forecast(f, monday, 1)[0][5], f.target[monday - 168 + 5]);
}

TEST(Naive, ConstantSeriesHasNoError) {
    SeriesFrame f = three_weeks();
    std::fill(f.target.begin(), f.target.end(), 42.0);
    const DayMatrix nv = naive_forecast(f, 168, 14);
    const DayMatrix y = actuals_matrix(f, 168, 14);
    for (double l : daily_l1(y, nv)) EXPECT_EQ(l, 0.0);
}

TEST(Naive, NeedsAWeekOfHistory) {
    const SeriesFrame f = three_weeks();
    EXPECT_THROW(naive_forecast(f, 6 * 24, 1), DataError);
    EXPECT_THROW(naive_forecast(f, 7 * 24 + 1, 1), DataError);
    EXPECT_THROW(naive_forecast(f, 20 * 24, 2), DataError);
}

// Predictive-ability tests

TEST(ChiSquare, TailMatchesClosedForms) {
    EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
    for (double x : {0.1, 1.0, 4.0, 13.0}) {
        EXPECT_NEAR(chi_square_sf(x, 2), std::exp(-x / 2.0), 1e-14);
        EXPECT_NEAR(chi_square_sf(x, 1), std::erfc(std::sqrt(x / 2.0)), 1e-14);
    }
    EXPECT_EQ(chi_square_sf(0.0, 3), 1.0);
}

TEST(GW, IdenticalForecastsGiveUnitPValue) {
    Rng rng(4);
    const DayMatrix e = random_matrix(60, 24, rng);
    const GWResult r = gw_test(e, e, 1);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.dof, 2u);
    EXPECT_EQ(r.conditioning, Conditioning::constant_plus_lags);
}

TEST(GW, PValueIsChiSquareTailOfStatistic) {
    Rng rng(5);
    const GWResult r = gw_test(random_matrix(100, 24, rng), random_matrix(100, 24, rng), 1);
    EXPECT_NEAR(r.p_value, std::exp(-r.statistic / 2.0), 1e-14);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    EXPECT_EQ(r.observations, 99u);
}

TEST(GW, ConstantOnlyConditioningIsTheUnconditionalTest) {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> delta(50);
        for (double& v : delta) v = 0.3 + standard_normal(rng);
        const GWResult g = gw_test_differential(delta, 0);
        const GWResult d = dm_test(delta);
        EXPECT_EQ(g.conditioning, Conditioning::constant_only);
        EXPECT_EQ(g.dof, 1u);
        EXPECT_NEAR(g.statistic, d.statistic, 1e-9 * std::max(1.0, d.statistic));
        EXPECT_NEAR(g.p_value, d.p_value, 1e-10);
    }
}

TEST(GW, StatisticMatchesNormalEquationsOracle) {
    // n R^2 = 1' X (X'X)^{-1} X' 1 for the design X = [Delta_t, Delta_{t-1} Delta_t].
    Rng rng(12);
    std::vector<double> delta(80);
    for (double& v : delta) v = 0.2 + standard_normal(rng);
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    for (std::size_t t = 1; t < delta.size(); ++t) {
        const double x1 = delta[t], x2 = delta[t - 1] * delta[t];
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1;
        b2 += x2;
    }
    const double det = a11 * a22 - a12 * a12;
    const double quad = (a22 * b1 * b1 - 2 * a12 * b1 * b2 + a11 * b2 * b2) / det;
    EXPECT_NEAR(gw_test_differential(delta, 1).statistic, quad, 1e-9 * quad);
}

TEST(GW, TooFewDaysIsAnError) {
    EXPECT_THROW(gw_test_differential(std::vector<double>(11, 1.0), 1), DataError);
    EXPECT_NO_THROW(gw_test_differential(std::vector<double>(12, 1.0), 1));
}

TEST(GW, NullRejectionRateIsCalibrated) {
    Rng rng(20240);
    std::size_t rejections = 0;
    const std::size_t trials = 500;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<double> delta(728);
        for (double& v : delta) v = standard_normal(rng) - standard_normal(rng);
        if (gw_test_differential(delta, 1).p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / trials;
    EXPECT_GE(rate, 0.02);
    EXPECT_LE(rate, 0.10);
}

TEST(GW, DoubleNoiseAlternativeIsDetected) {
    Rng rng(99);
    std::size_t detected = 0;
    for (int t = 0; t < 100; ++t) {
        DayMatrix ea(728, std::vector<double>(24)), eb = ea;
        for (std::size_t d = 0; d < 728; ++d)
            for (std::size_t h = 0; h < 24; ++h) {
                ea[d][h] = standard_normal(rng);
                eb[d][h] = 2.0 * standard_normal(rng);
            }
        const GWResult r = gw_test(ea, eb, 1);
        EXPECT_LT(r.mean_differential, 0.0);
        if (r.p_value < 0.01) ++detected;
    }
    EXPECT_GE(detected, 95u);
}

TEST(GWMatrixTest, ShapeDiagonalAndDirection) {
    Rng rng(7);
    const DayMatrix y = random_matrix(60, 24, rng, 10.0);
    std::vector<DayMatrix> fs;
    for (double noise : {1.0, 2.0, 1.5}) {
        DayMatrix f = y;
        for (auto& row : f)
            for (double& v : row) v += noise * standard_normal(rng);
        fs.push_back(f);
    }
    const GWMatrix m = gw_matrix({"a", "b", "c"}, fs, y);
    ASSERT_EQ(m.p_values.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        ASSERT_EQ(m.p_values[i].size(), 3u);
        EXPECT_EQ(m.p_values[i][i], 1.0);
        EXPECT_FALSE(m.column_better[i][i]);
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) {
                EXPECT_NE(m.column_better[i][j], m.column_better[j][i]);
            }
    }
    EXPECT_TRUE(m.column_better[1][0]);  // a beats b
    EXPECT_LT(m.p_values[1][0], 0.01);
    std::ostringstream os;
    m.write_csv(os);
    EXPECT_EQ(os.str().substr(0, 14), "model,a,b,c\na,");
    EXPECT_THROW(gw_matrix({"a"}, {y}, y), ConfigError);
}

// Forecast files

TEST(ForecastFile, RoundTripIsExact) {
    Rng rng(10);
    ForecastTable t;
    for (std::size_t d = 0; d < 5; ++d) t.origins.push_back(make_hour_stamp(2022, 2, 27, 0) + static_cast<HourStamp>(24 * d));
    t.values = random_matrix(5, 24, rng, 1e3);
    std::ostringstream os;
    write_forecast_csv(os, t);
    EXPECT_EQ(os.str().substr(0, 28), "origin_date,h00,h01,h02,h03,");
    EXPECT_NE(os.str().find("\n2022-03-01,"), std::string::npos);
    std::istringstream is(os.str());
    EXPECT_EQ(read_forecast_csv(is), t);
}

TEST(ForecastFile, BadRowsReportTheirLine) {
    std::istringstream bad("origin_date,h00,h01\n2022-01-01,1,2\n2022-01-02,1,x\n");
    try {
        read_forecast_csv(bad);
        FAIL() << "expected MalformedRowError";
    } catch (const MalformedRowError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream unordered("origin_date,h00\n2022-01-02,1\n2022-01-01,2\n");
    EXPECT_THROW(read_forecast_csv(unordered), OrderError);
}

TEST(ForecastFile, AlignsActualsAndNaive) {
    const SeriesFrame f = three_weeks();
    ForecastTable t{{f.timestamps[8 * 24], f.timestamps[14 * 24]}, DayMatrix(2, std::vector<double>(24, 0.0))};
    const DayMatrix y = aligned_actuals(f, t);
    EXPECT_EQ(y[1][3], 1403.0);
    const DayMatrix nv = aligned_naive(f, t);
    EXPECT_EQ(nv[0][0], 700.0);   // Tuesday copies Monday
    EXPECT_EQ(nv[1][0], 700.0);   // Monday copies last Monday
}
