#include "oilvol/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace oilvol;
using namespace oilvol::eval;

namespace {

Date day(int offset) { return Date{std::chrono::year{2021} / 1 / 1} + std::chrono::days{offset}; }

features::Dataset dataset(const Matrix& X, const std::vector<int>& y) {
    features::Dataset ds;
    ds.X = X;
    ds.y = y;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ds.dates.push_back(day(static_cast<int>(i)));
        ds.label_dates.push_back(day(static_cast<int>(i) + 1));
    }
    for (std::size_t j = 0; j < X.cols(); ++j) ds.columns.push_back("f" + std::to_string(j));
    return ds;
}

RollingConfig small(std::size_t min_window = 1) {
    RollingConfig c;
    c.min_window = min_window;
    return c;
}

PredictionLog log_of(const std::vector<std::pair<int, int>>& pred_actual) {
    PredictionLog log;
    for (std::size_t i = 0; i < pred_actual.size(); ++i) {
        log.entries.push_back({day(static_cast<int>(i)), pred_actual[i].first, pred_actual[i].second, 0.5});
    }
    return log;
}

// Two-sided tail mass by enumerating every assignment of the b + c discordant pairs.
double brute_force_exact(std::size_t b, std::size_t c) {
    const std::size_t n = b + c;
    if (n == 0) return 1.0;
    const std::size_t lo = std::min(b, c);
    double tail = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) <= lo) tail += 1.0;
    }
    return std::min(1.0, 2.0 * tail / std::pow(2.0, static_cast<double>(n)));
}

}  // namespace

TEST(Plan, Arithmetic) {
    auto p = plan_windows(10, small());
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0].eval_row, 8u);
    EXPECT_EQ(p[0].train_begin, 0u);
    EXPECT_EQ(p[1].train_begin, 1u);

    auto c = small();
    c.step = 2;
    c.window_rows = 8;
    auto q = plan_windows(12, c);
    ASSERT_EQ(q.size(), 2u);
    // Rows 9 and 11 counted from 1.
    EXPECT_EQ(q[0].eval_row, 8u);
    EXPECT_EQ(q[1].eval_row, 10u);

    c.window_mode = WindowMode::expanding;
    EXPECT_EQ(plan_windows(12, c)[1].train_begin, 0u);
}

TEST(Plan, MinimumWindowEnforced) {
    try {
        plan_windows(10, RollingConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
    }
    EXPECT_EQ(plan_windows(40, RollingConfig{}).size(), 8u);
    auto bad = small();
    bad.train_fraction = 1.0;
    EXPECT_THROW(plan_windows(10, bad), Error);
}

TEST(Rolling, SeparableFeatureGivesPerfectAccuracy) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1);
    const std::size_t n = 60;
    Matrix X(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(rng() % 2);
        X(i, 0) = y[i] == 1 ? 5.0 + g(rng) * 0.1 : -5.0 + g(rng) * 0.1;
        X(i, 1) = g(rng);
    }
    auto log = rolling_eval(dataset(X, y), models::EnsembleSpec{}, RollingConfig{});
    EXPECT_EQ(log.entries.size(), 12u);
    EXPECT_EQ(classification_metrics(log).accuracy, 1.0);
    EXPECT_EQ(log.entries[0].date, day(49));
}

TEST(Rolling, SingleClassWindowPredictsThatClass) {
    Matrix X(12, 1, 0.0);
    std::vector<int> y(12, 1);
    y[11] = 0;
    auto c = small();
    c.window_rows = 8;
    auto log = rolling_eval(dataset(X, y), models::EnsembleSpec{.knn_k = 3}, c);
    for (const auto& e : log.entries) EXPECT_EQ(e.predicted, 1);
}

TEST(Rolling, ThreadCountDoesNotChangeOutput) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 1);
    Matrix X(80, 3);
    std::vector<int> y(80);
    for (std::size_t i = 0; i < 80; ++i) {
        for (std::size_t j = 0; j < 3; ++j) X(i, j) = g(rng);
        y[i] = X(i, 0) + 0.5 * g(rng) > 0;
    }
    auto ds = dataset(X, y);
    RollingConfig one;
    RollingConfig four;
    four.threads = 4;
    EXPECT_EQ(log_to_csv(rolling_eval(ds, {}, one)), log_to_csv(rolling_eval(ds, {}, four)));
}

TEST(Rolling, SentinelOnEvaluationDaysDoesNotReachEarlierWindows) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0, 1);
    const std::size_t n = 70;
    Matrix X(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) X(i, j) = g(rng);
        y[i] = static_cast<int>(rng() % 2);
    }
    auto clean = dataset(X, y);
    auto leaky = clean;
    const auto plans = plan_windows(n, RollingConfig{});
    for (const auto& p : plans) leaky.X(p.eval_row, 0) = leaky.y[p.eval_row] * 100.0;
    for (const auto& p : plans) {
        const auto a = models::ensemble_to_json(fit_window(clean, {}, p));
        const auto b = models::ensemble_to_json(fit_window(leaky, {}, p));
        // Only rows before eval_row shape the model; those are untouched up to the first evaluation day.
        if (p.eval_row == plans.front().eval_row) EXPECT_EQ(a, b);
        EXPECT_LE(p.train_end, p.eval_row);
    }
}

TEST(Metrics, ConfusionOracle) {
    // TP=2, FP=1, FN=1, TN=2
    auto m = classification_metrics(log_of({{1, 1}, {1, 1}, {1, 0}, {0, 1}, {0, 0}, {0, 0}}));
    EXPECT_NEAR(m.accuracy, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(m.precision, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(m.recall, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
}

TEST(Metrics, PerfectAndAllOnes) {
    auto p = classification_metrics(log_of({{1, 1}, {0, 0}}));
    EXPECT_EQ(p.accuracy, 1.0);
    EXPECT_EQ(p.precision, 1.0);
    EXPECT_EQ(p.recall, 1.0);
    EXPECT_EQ(p.f1, 1.0);
    auto q = classification_metrics(log_of({{1, 1}, {1, 0}, {1, 1}, {1, 0}}));
    EXPECT_EQ(q.accuracy, 0.5);
    EXPECT_EQ(q.recall, 0.5);
    EXPECT_EQ(q.precision, 0.25);
}

TEST(Metrics, WeightedRecallEqualsAccuracy) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::pair<int, int>> pa(1 + rng() % 40);
        for (auto& [p, a] : pa) {
            p = static_cast<int>(rng() % 2);
            a = static_cast<int>(rng() % 2);
        }
        auto m = classification_metrics(log_of(pa));
        EXPECT_NEAR(m.recall, m.accuracy, 1e-12);
    }
}

TEST(McNemar, ExactExample) {
    auto r = mcnemar_from_counts(2, 8);
    EXPECT_EQ(r.mode, McNemarMode::exact);
    EXPECT_NEAR(r.p_value, 0.109375, 1e-12);
    EXPECT_FALSE(r.statistic.has_value());
    for (std::size_t k : {1u, 4u, 12u}) EXPECT_EQ(mcnemar_from_counts(k, k).p_value, 1.0);
}

TEST(McNemar, ChiSquareExample) {
    auto r = mcnemar_from_counts(15, 35);
    EXPECT_EQ(r.mode, McNemarMode::chi2_cc);
    ASSERT_TRUE(r.statistic);
    EXPECT_NEAR(*r.statistic, 7.22, 1e-12);
    EXPECT_NEAR(r.p_value, 0.00721, 1e-4);
    EXPECT_NEAR(chi2_1_sf(3.841458820694124), 0.05, 1e-9);
}

TEST(McNemar, DegenerateAndBoundary) {
    auto r = mcnemar_from_counts(0, 0);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_EQ(mcnemar_from_counts(13, 12).mode, McNemarMode::chi2_cc);
    EXPECT_EQ(mcnemar_from_counts(12, 12).mode, McNemarMode::exact);
}

TEST(McNemar, ExactMatchesEnumeration) {
    for (std::size_t b = 0; b <= 12; ++b)
        for (std::size_t c = 0; b + c <= 12; ++c) EXPECT_NEAR(mcnemar_exact_p(b, c), brute_force_exact(b, c), 1e-12);
}

TEST(McNemar, SymmetryAndContract) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<int, int>> a(1 + rng() % 60), b(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            const int actual = static_cast<int>(rng() % 2);
            a[i] = {static_cast<int>(rng() % 2), actual};
            b[i] = {static_cast<int>(rng() % 2), actual};
        }
        auto ab = mcnemar(log_of(a), log_of(b));
        auto ba = mcnemar(log_of(b), log_of(a));
        EXPECT_EQ(ab.b, ba.c);
        EXPECT_EQ(ab.c, ba.b);
        EXPECT_EQ(ab.p_value, ba.p_value);
    }
    auto shorter = log_of({{1, 1}});
    EXPECT_THROW(mcnemar(shorter, log_of({{1, 1}, {0, 0}})), Error);
    auto shifted = shorter;
    shifted.entries[0].date = day(5);
    EXPECT_THROW(mcnemar(shorter, shifted), Error);
}

TEST(Io, LogRoundTripAndTables) {
    auto log = log_of({{1, 0}, {0, 0}});
    log.entries[1].proba1 = 0.123456789;
    auto back = log_from_csv(log_to_csv(log));
    ASSERT_EQ(back.entries.size(), 2u);
    EXPECT_EQ(back.entries[1].proba1, 0.123456789);
    EXPECT_EQ(back.entries[0].predicted, 1);

    auto table = metrics_table_csv({{"har", classification_metrics(log)}});
    EXPECT_EQ(table, "model,accuracy,precision,recall,f1,support0,support1\nhar,0.5000,1.0000,0.5000,0.6667,2,0\n");

    auto tri = mcnemar_triangle_csv({"a", "b"}, {{"a", "b", mcnemar_from_counts(2, 8)}});
    EXPECT_EQ(tri, "model,a,b\na,,\nb,0.1094,\n");
}
