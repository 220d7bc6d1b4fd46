#include "bunforge/error.hpp"
#include "bunforge/market.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bunforge;
using namespace bunforge::testing;

namespace {

VolSeries series_of(const std::vector<double>& values, const std::vector<bool>& flagged = {}) {
    VolSeries s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        VolDay d;
        d.day = 18000 + static_cast<std::int64_t>(i);
        d.vol1 = values[i];
        d.n_samples = 1440;
        d.flagged = !flagged.empty() && flagged[i];
        s.days.push_back(d);
    }
    return s;
}

std::vector<double> gbm_day(std::mt19937_64& rng, double p0, double sigma, std::size_t returns) {
    std::normal_distribution<double> z(0.0, sigma);
    std::vector<double> closes{p0};
    for (std::size_t i = 0; i < returns; ++i) closes.push_back(closes.back() * std::exp(z(rng)));
    return closes;
}

}  // namespace

// ----------------------------------------------------------------------- vol1

TEST(Vol1, ConstantDayIsZero) {
    const std::vector<double> closes(1441, 27000.0);
    const auto r = vol1(closes);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.n_samples, 1440U);
    EXPECT_FALSE(r.flagged);
}

TEST(Vol1, AlternatingClosedForm) {
    const double sigma = 0.001, p = 100.0;
    std::vector<double> closes;
    for (int i = 0; i <= 1440; ++i) closes.push_back(i % 2 == 0 ? p : p * std::exp(sigma));
    const double expected = sigma * std::sqrt(1440.0 * 1440.0 / 1439.0);
    EXPECT_NEAR(vol1(closes).value, expected, 1e-9);
    EXPECT_NEAR(expected, 0.03796, 1e-5);
}

TEST(Vol1, ScaleInvariance) {
    std::mt19937_64 rng(70);
    const auto closes = gbm_day(rng, 100.0, 5e-4, 1440);
    auto scaled = closes;
    for (double& c : scaled) c *= 37.25;
    EXPECT_NEAR(vol1(closes).value, vol1(scaled).value, 1e-12);
}

TEST(Vol1, MonteCarloMeanMatchesSigma) {
    std::mt19937_64 rng(71);
    const double sigma = 5e-4;
    double sum = 0.0;
    const int days = 1000;
    for (int d = 0; d < days; ++d) sum += vol1(gbm_day(rng, 100.0, sigma, 1440)).value;
    EXPECT_NEAR(sum / days, sigma * std::sqrt(1440.0), 0.02 * sigma * std::sqrt(1440.0));
}

TEST(Vol1, LowCoverageIsFlaggedAndRescaled) {
    std::mt19937_64 rng(72);
    const auto closes = gbm_day(rng, 100.0, 5e-4, 1000);
    const auto r = vol1(closes);
    EXPECT_TRUE(r.flagged);
    EXPECT_EQ(r.n_samples, 1000U);
    const auto full = vol1(closes, {1000, 0.9});
    EXPECT_FALSE(full.flagged);
    EXPECT_NEAR(r.value, full.value, 1e-15);  // both scale by sqrt(1000)
    const std::vector<double> two{1.0, 2.0};
    try {
        (void)vol1(two);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
    }
}

TEST(DailyVol1, AnchorsOnPreviousCloseAndFlagsMissingDays) {
    PriceSeries s;
    const std::int64_t day0 = 19000;
    std::mt19937_64 rng(73);
    for (std::int64_t d : {day0, day0 + 1, day0 + 3}) {
        const auto closes = gbm_day(rng, 100.0, 5e-4, 1439);
        for (std::int64_t m = 0; m < 1440; ++m) s.points.push_back({d * 1440 + m, closes[m]});
    }
    const auto v = daily_vol1(s);
    ASSERT_EQ(v.days.size(), 4U);
    EXPECT_EQ(v.days[0].n_samples, 1439U);  // no earlier close to anchor on
    EXPECT_FALSE(v.days[0].flagged);
    EXPECT_EQ(v.days[1].n_samples, 1440U);
    EXPECT_TRUE(v.days[2].flagged);
    EXPECT_TRUE(std::isnan(v.days[2].vol1));
    EXPECT_EQ(v.days[3].n_samples, 1440U);

    std::vector<double> day1{s.points[1439].close};
    for (int m = 0; m < 1440; ++m) day1.push_back(s.points[1440 + m].close);
    EXPECT_EQ(v.days[1].vol1, vol1(day1).value);
}

TEST(Candles, CsvRoundTripWithAndWithoutHeader) {
    ScratchDir dir("candles");
    const auto p = dir.write("c.csv",
                             "timestamp_ms,open,high,low,close,volume\n"
                             "1600000020000,1,1,1,10.5,3\n"
                             "1600000080000,1,1,1,10.25,3\n");
    const auto s = read_candles_csv(p, "BTCUSDT");
    ASSERT_EQ(s.points.size(), 2U);
    EXPECT_EQ(s.points[1].close, 10.25);
    EXPECT_EQ(s.points[1].minute - s.points[0].minute, 1);
    write_candles_csv(s, dir / "d.csv");
    const auto back = read_candles_csv(dir / "d.csv", "BTCUSDT");
    EXPECT_EQ(back.points[0].minute, s.points[0].minute);
    EXPECT_EQ(back.points[1].close, 10.25);
    const auto bare = read_candles_csv(dir.write("e.csv", "1600000020000,1,1,1,3,0\n"), "X");
    EXPECT_EQ(bare.points.size(), 1U);
}

// ------------------------------------------------------------------- wilcoxon

TEST(Wilcoxon, AllZeroDifferences) {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
    const auto r = wilcoxon_signed_rank(x, x);
    EXPECT_TRUE(r.all_zero);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_FALSE(r.reject);
    EXPECT_EQ(r.n_pairs, 0U);
}

TEST(Wilcoxon, FivePositivePairs) {
    const std::vector<double> b{2, 4, 6, 8, 10}, a{1, 2, 3, 4, 5};
    const auto r = wilcoxon_signed_rank(b, a);
    EXPECT_NEAR(r.p_value, 0.0625, 1e-15);
    EXPECT_FALSE(r.reject);
    EXPECT_EQ(r.method, WilcoxonMethod::Exact);
}

TEST(Wilcoxon, SevenPairsMatchEnumeration) {
    std::mt19937_64 rng(80);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_int_distribution<int> coarse(-3, 3);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> b(7), a(7);
        for (int k = 0; k < 7; ++k) {
            // Every third case uses a coarse grid to exercise ties and zeros.
            b[k] = i % 3 == 0 ? coarse(rng) : z(rng);
            a[k] = i % 3 == 0 ? coarse(rng) : z(rng) + 0.3;
        }
        const auto r = wilcoxon_signed_rank(b, a);
        ASSERT_NEAR(r.p_value, oracle::wilcoxon_enumeration(b, a), 1e-12) << "case " << i;
        ASSERT_EQ(r.reject, r.p_value < 0.05);
    }
}

TEST(Wilcoxon, EnumerationUpToSixteen) {
    std::mt19937_64 rng(81);
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t n = 1; n <= 16; ++n) {
        for (int i = 0; i < 5; ++i) {
            std::vector<double> b(n), a(n);
            for (std::size_t k = 0; k < n; ++k) {
                b[k] = std::round(z(rng) * 4) / 4;
                a[k] = std::round(z(rng) * 4) / 4 + 0.25;
            }
            ASSERT_NEAR(wilcoxon_signed_rank(b, a, 0.05, WilcoxonMethod::Exact).p_value,
                        oracle::wilcoxon_enumeration(b, a), 1e-12);
        }
    }
}

TEST(Wilcoxon, SwapSymmetry) {
    std::mt19937_64 rng(82);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> b(n), a(n);
        for (std::size_t k = 0; k < n; ++k) {
            b[k] = z(rng);
            a[k] = z(rng);
        }
        ASSERT_EQ(wilcoxon_signed_rank(b, a).p_value, wilcoxon_signed_rank(a, b).p_value);
    }
}

TEST(Wilcoxon, NormalApproximationCloseToExact) {
    std::mt19937_64 rng(83);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> shift(0.0, 1.0);
    for (std::size_t n = 10; n <= 25; ++n) {
        for (int i = 0; i < 100; ++i) {
            std::vector<double> b(n), a(n);
            const double s = shift(rng);
            for (std::size_t k = 0; k < n; ++k) {
                b[k] = z(rng) + s;
                a[k] = z(rng);
            }
            const auto exact = wilcoxon_signed_rank(b, a, 0.05, WilcoxonMethod::Exact);
            const auto approx = wilcoxon_signed_rank(b, a, 0.05, WilcoxonMethod::Normal);
            ASSERT_NEAR(exact.p_value, approx.p_value, 0.02) << "n=" << n;
        }
    }
}

TEST(Wilcoxon, AutoSwitchesAboveTwentyFive) {
    std::vector<double> b(30), a(30);
    for (int k = 0; k < 30; ++k) {
        b[k] = k + 1.5;
        a[k] = k * 1.01;
    }
    EXPECT_EQ(wilcoxon_signed_rank(b, a).method, WilcoxonMethod::Normal);
    b.resize(25);
    a.resize(25);
    EXPECT_EQ(wilcoxon_signed_rank(b, a).method, WilcoxonMethod::Exact);
}

// ---------------------------------------------------------------------- sweep

TEST(Sweep, ConstantSeries) {
    const auto sweep = rolling_sweep(series_of(std::vector<double>(30, 0.02)));
    ASSERT_EQ(sweep.rows.size(), 30U - 14U);
    for (const auto& row : sweep.rows) {
        EXPECT_EQ(row.p_value, 1.0);
        EXPECT_FALSE(row.reject);
    }
}

TEST(Sweep, LevelShiftDetectedInBand) {
    const std::int64_t d0 = 20;
    std::vector<double> v(41);
    for (std::int64_t i = 0; i < 41; ++i) v[i] = i < d0 ? 0.02 : 0.05;
    const auto sweep = rolling_sweep(series_of(v));
    ASSERT_EQ(sweep.rows.size(), 41U - 14U);
    for (const auto& row : sweep.rows) {
        const std::int64_t d = row.day - 18000;
        const bool in_band = d >= d0 - 2 && d <= d0 + 1;
        EXPECT_EQ(row.reject, in_band) << "day " << d << " p=" << row.p_value;
    }
}

TEST(Sweep, FlaggedDaysAreDropped) {
    std::vector<double> v(15, 0.02);
    std::vector<bool> flags(15, false);
    v[6] = 0.5;  // would be a difference at k=1 for D=7
    flags[6] = true;
    const auto sweep = rolling_sweep(series_of(v, flags));
    ASSERT_EQ(sweep.rows.size(), 1U);
    EXPECT_EQ(sweep.rows[0].n_pairs, 0U);
    EXPECT_EQ(sweep.rows[0].p_value, 1.0);
}

TEST(Sweep, SpanTooShort) {
    try {
        rolling_sweep(series_of(std::vector<double>(14, 1.0)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SpanTooShort);
    }
}

TEST(Sweep, CsvExport) {
    ScratchDir dir("sweep");
    const auto sweep = rolling_sweep(series_of(std::vector<double>(16, 0.02)));
    write_sweep_csv(sweep, dir / "s.csv");
    const auto text = slurp(dir / "s.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "event_date,p_value,h,n_pairs");
    EXPECT_NE(text.find(format_date(18007)), std::string::npos);
}

// ---------------------------------------------------------------- yearly stats

TEST(YearlyStats, Examples) {
    const auto one = yearly_stats(series_of({0.01, 0.03}));
    ASSERT_EQ(one.size(), 1U);
    EXPECT_DOUBLE_EQ(one[0].max, 0.03);
    EXPECT_DOUBLE_EQ(one[0].mean, 0.02);
    EXPECT_DOUBLE_EQ(one[0].min, 0.01);
    const auto single = yearly_stats(series_of({0.04}));
    EXPECT_EQ(single[0].std, 0.0);
    EXPECT_TRUE(single[0].degenerate);
}

TEST(YearlyStats, MatchesNaiveAggregates) {
    std::mt19937_64 rng(90);
    std::vector<double> v;
    for (int i = 0; i < 800; ++i) v.push_back(vol1(gbm_day(rng, 100.0, 5e-4, 1440)).value);
    const auto s = series_of(v);
    const auto stats = yearly_stats(s);
    for (const auto& y : stats) {
        std::vector<double> xs;
        for (const auto& d : s.days)
            if (year_of(d.day) == y.year) xs.push_back(d.vol1);
        long double sum = 0;
        for (double x : xs) sum += x;
        const long double mean = sum / xs.size();
        long double ss = 0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        EXPECT_EQ(y.count, xs.size());
        EXPECT_NEAR(y.mean, static_cast<double>(mean), 1e-12);
        EXPECT_NEAR(y.std, std::sqrt(static_cast<double>(ss / (xs.size() - 1))), 1e-12);
        EXPECT_EQ(y.max, *std::max_element(xs.begin(), xs.end()));
        EXPECT_EQ(y.min, *std::min_element(xs.begin(), xs.end()));
    }
    EXPECT_EQ(format_date(0), "1970-01-01");
    EXPECT_EQ(year_of(18000), 2019);
}
