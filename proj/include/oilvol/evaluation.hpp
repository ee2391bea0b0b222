#pragma once

#include "oilvol/classifiers.hpp"
#include "oilvol/common.hpp"
#include "oilvol/features.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oilvol::eval {

enum class WindowMode { sliding, expanding };

struct RollingConfig {
    double train_fraction = 0.8;
    std::size_t step = 1;
    WindowMode window_mode = WindowMode::sliding;
    /// Overrides floor(train_fraction * rows) when set.
    std::optional<std::size_t> window_rows;
    std::size_t min_window = 30;
    /// Worker threads for independent windows; output order never depends on it.
    std::size_t threads = 1;
};

/// Training rows [train_begin, train_end) predict row `eval_row`.
struct WindowPlan {
    std::size_t eval_row = 0;
    std::size_t train_begin = 0;
    std::size_t train_end = 0;
};

/// Throws Error{insufficient_data} when the window is shorter than
/// min_window or leaves nothing to evaluate.
std::vector<WindowPlan> plan_windows(std::size_t rows, const RollingConfig& config);

struct Prediction {
    Date date;  // the day whose direction is predicted
    int predicted = 0;
    int actual = 0;
    double proba1 = 0.0;
};

struct PredictionLog {
    std::vector<Prediction> entries;
};

/// Fits a fresh standardizer and ensemble on each window and predicts the
/// next row. A window whose labels hold a single class predicts that class.
PredictionLog rolling_eval(const features::Dataset& dataset, const models::EnsembleSpec& spec,
                           const RollingConfig& config);

/// The ensemble that rolling_eval uses for `plan`.
models::FittedEnsemble fit_window(const features::Dataset& dataset, const models::EnsembleSpec& spec,
                                  const WindowPlan& plan);

struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::array<std::size_t, 2> support{};
    std::size_t total = 0;
};

/// Support-weighted precision, recall, and F1. Undefined per-class precision
/// (no predictions of that class) counts as 0.
MetricsReport classification_metrics(const PredictionLog& log);

enum class McNemarMode { exact, chi2_cc };
std::string_view to_string(McNemarMode m);

struct McNemarResult {
    std::size_t b = 0;  // A correct, B wrong
    std::size_t c = 0;  // A wrong, B correct
    McNemarMode mode = McNemarMode::exact;
    std::optional<double> statistic;  // set in chi2_cc mode
    double p_value = 1.0;
    bool degenerate = false;  // b + c == 0
    // Both variants, whatever the selected mode.
    double p_exact = 1.0;
    double chi2_statistic = 0.0;
    double p_chi2 = 1.0;
};

inline constexpr std::size_t kMcNemarExactBelow = 25;

/// Two-sided exact binomial p-value min(1, 2 * P[X <= min(b, c)]), X ~ Bin(b + c, 1/2).
double mcnemar_exact_p(std::size_t b, std::size_t c);
/// Survival function of chi-square with one degree of freedom.
double chi2_1_sf(double x);
McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c);
/// Throws Error{contract} when the logs cover different dates.
McNemarResult mcnemar(const PredictionLog& log_a, const PredictionLog& log_b);

std::string log_to_csv(const PredictionLog& log);
PredictionLog log_from_csv(std::string_view text);

struct NamedMetrics {
    std::string model;
    MetricsReport metrics;
};
/// `model,accuracy,precision,recall,f1,support0,support1`.
std::string metrics_table_csv(const std::vector<NamedMetrics>& rows);

struct PairwiseTest {
    std::string model_a;
    std::string model_b;
    McNemarResult result;
};
/// Lower-triangle p-value table: header `model,<m1>,...`; cell (i, j) for j < i.
std::string mcnemar_triangle_csv(const std::vector<std::string>& models, const std::vector<PairwiseTest>& tests);

}  // namespace oilvol::eval
