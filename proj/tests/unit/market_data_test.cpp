#include "oilvol/market_data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace oilvol;
using namespace oilvol::market;

namespace {

Date day(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y} / m / d}; }

RvSeries make_rv(const std::vector<double>& values) {
    RvSeries rv;
    Date d = day(2020, 1, 1);
    for (double v : values) {
        rv.push_back({d, v});
        d += std::chrono::days{1};
    }
    return rv;
}

}  // namespace

TEST(ParseBars, TwoRowsAscending) {
    auto bars = parse_bars("timestamp,price\n2020-03-09T10:05,31.20\n2020-03-09T10:00,31.50\n");
    ASSERT_EQ(bars.size(), 2u);
    EXPECT_LT(bars[0].timestamp, bars[1].timestamp);
    EXPECT_DOUBLE_EQ(bars[0].price, 31.50);
}

TEST(ParseBars, EmptyFileGivesEmptySeries) {
    EXPECT_TRUE(parse_bars("").empty());
    EXPECT_TRUE(parse_bars("timestamp,price\n").empty());
}

TEST(ParseBars, NonPositivePriceIsValidationError) {
    try {
        parse_bars("timestamp,price\n2020-03-09T10:00,-1.0\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::validation);
    }
}

TEST(ParseBars, DuplicateAndMalformedRowsReportLine) {
    try {
        parse_bars("timestamp,price\n2020-03-09T10:00,1\n2020-03-09T10:00,2\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parse);
    }
    try {
        parse_bars("timestamp,price\n2020-03-09T10:00,1\nnot-a-time,2\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Timestamps, OffsetsConvertToUtc) {
    auto a = parse_timestamp("2020-03-09T10:00+01:00");
    auto b = parse_timestamp("2020-03-09T09:00Z");
    ASSERT_TRUE(a && b);
    EXPECT_EQ(*a, *b);
    EXPECT_EQ(format_timestamp(*b), "2020-03-09T09:00");
}

TEST(LogReturns, SingleReturnOracle) {
    auto r = log_returns(parse_bars("timestamp,price\n2020-03-09T10:00,100\n2020-03-09T10:05,101\n"));
    ASSERT_EQ(r.days.size(), 1u);
    ASSERT_EQ(r.days[0].returns.size(), 1u);
    EXPECT_NEAR(r.days[0].returns[0], 0.00995033085316809, 1e-15);
}

TEST(LogReturns, ConstantPricesGiveZeroReturns) {
    auto r = log_returns(
        parse_bars("timestamp,price\n2020-03-09T10:00,100\n2020-03-09T10:05,100\n2020-03-09T10:10,100\n"));
    ASSERT_EQ(r.days[0].returns.size(), 2u);
    EXPECT_EQ(r.days[0].returns[0], 0.0);
    EXPECT_EQ(r.days[0].returns[1], 0.0);
}

TEST(LogReturns, NoOvernightReturnAndSparseDaySkipped) {
    auto r = log_returns(parse_bars("timestamp,price\n2020-03-09T10:00,100\n2020-03-09T10:05,101\n"
                                    "2020-03-10T10:00,150\n2020-03-11T10:00,100\n2020-03-11T10:05,100\n"));
    ASSERT_EQ(r.days.size(), 2u);
    EXPECT_EQ(r.days[0].returns.size(), 1u);
    EXPECT_EQ(r.days[1].returns[0], 0.0);
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_EQ(r.skipped[0].day, day(2020, 3, 10));
}

TEST(LogReturns, GridUsesLastObservationAtOrBefore) {
    // 10:03 falls between grid points; the 10:05 grid point takes its price.
    auto r = log_returns(
        parse_bars("timestamp,price\n2020-03-09T10:00,100\n2020-03-09T10:03,110\n2020-03-09T10:10,121\n"));
    ASSERT_EQ(r.days[0].returns.size(), 2u);
    EXPECT_NEAR(r.days[0].returns[0], std::log(1.1), 1e-15);
    EXPECT_NEAR(r.days[0].returns[1], std::log(1.1), 1e-15);
}

TEST(RealizedVariance, Examples) {
    std::vector<ReturnSeries> days{{day(2020, 1, 1), {0.01, -0.02, 0.005}, 5},
                                   {day(2020, 1, 2), {}, 5},
                                   {day(2020, 1, 3), {0.1}, 5}};
    auto rv = realized_variance(days);
    ASSERT_EQ(rv.size(), 2u);
    EXPECT_DOUBLE_EQ(rv[0].rv, 0.000525);
    EXPECT_DOUBLE_EQ(rv[1].rv, 0.01);
}

TEST(RealizedVariance, AdditivityProperty) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0, 0.01);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> r(1 + rng() % 100);
        for (auto& v : r) v = g(rng);
        const std::size_t cut = rng() % (r.size() + 1);
        std::vector<double> a(r.begin(), r.begin() + cut), b(r.begin() + cut, r.end());
        double sa = 0, sb = 0;
        for (double v : a) sa += v * v;
        for (double v : b) sb += v * v;
        auto rv = realized_variance({{day(2020, 1, 1), r, 5}});
        EXPECT_NEAR(rv[0].rv, sa + sb, 1e-12);
    }
}

TEST(Labels, Examples) {
    EXPECT_EQ(direction_labels(make_rv({0.2, 0.5}))[0].label, 1);
    EXPECT_EQ(direction_labels(make_rv({0.5, 0.5}))[0].label, 0);
    EXPECT_EQ(direction_labels(make_rv({0.5, 0.2}))[0].label, 0);
    EXPECT_THROW(direction_labels(make_rv({0.5})), Error);
}

TEST(Labels, ReversalFlipsStrictlyMonotoneSeries) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(2 + rng() % 30);
        double x = u(rng);
        for (auto& e : v) e = (x += u(rng));
        std::vector<double> rev(v.rbegin(), v.rend());
        auto a = direction_labels(make_rv(v));
        auto b = direction_labels(make_rv(rev));
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].label, 1 - b[b.size() - 1 - i].label);
    }
}

TEST(Har, Examples) {
    std::vector<double> v(23, 0.0);
    for (int k = 0; k < 5; ++k) v[17 + k] = k + 1;  // prior 5 days: 1..5
    v[21] = 0.7;
    auto rows = har_features(make_rv(v));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_DOUBLE_EQ(rows[0].rv_daily, 0.7);
    EXPECT_DOUBLE_EQ(rows[0].rv_weekly, (1 + 2 + 3 + 4 + 0.7) / 5.0);

    std::vector<double> w(23, 0.0);
    for (int k = 0; k < 5; ++k) w[17 + k] = k + 1;
    EXPECT_DOUBLE_EQ(har_features(make_rv(w))[0].rv_weekly, 3.0);

    auto c = har_features(make_rv(std::vector<double>(30, 0.25)));
    ASSERT_EQ(c.size(), 8u);
    for (const auto& r : c) {
        EXPECT_EQ(r.rv_daily, 0.25);
        EXPECT_DOUBLE_EQ(r.rv_weekly, 0.25);
        EXPECT_DOUBLE_EQ(r.rv_monthly, 0.25);
    }
}

TEST(Har, OnlyUsesStrictlyEarlierDays) {
    std::vector<double> v(40, 1.0);
    auto base = har_features(make_rv(v));
    v[30] = 1000.0;
    auto bumped = har_features(make_rv(v));
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i].day <= make_rv(v)[30].day) {
            EXPECT_EQ(base[i].rv_daily, bumped[i].rv_daily);
            EXPECT_EQ(base[i].rv_monthly, bumped[i].rv_monthly);
        }
    }
}

TEST(Csv, RvAndLabelsRoundTrip) {
    auto rv = make_rv({0.1, 0.2, 0.15});
    auto back = rv_from_csv(rv_to_csv(rv));
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[2].rv, 0.15);
    auto labels = direction_labels(rv);
    auto lb = labels_from_csv(labels_to_csv(labels));
    ASSERT_EQ(lb.size(), 2u);
    EXPECT_EQ(lb[0].label, 1);
    EXPECT_EQ(lb[1].label, 0);
}
