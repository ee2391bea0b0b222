#pragma once

#include "oilvol/common.hpp"
#include "oilvol/embeddings.hpp"
#include "oilvol/market_data.hpp"
#include "oilvol/news_pipeline.hpp"
#include "oilvol/sentiment.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oilvol::features {

enum class Channel { count, sentiment, embedding, har };
std::string_view to_string(Channel c);
std::optional<Channel> channel_from_string(std::string_view s);

/// Per-day feature rows for one channel. No missing cells.
struct FeatureFrame {
    Channel channel = Channel::count;
    std::vector<Date> dates;
    std::vector<std::string> columns;
    Matrix matrix;
    /// Lag order baked into the columns (0 for a base frame).
    std::size_t lags = 0;

    std::size_t rows() const noexcept { return dates.size(); }
};

using LaggedFrame = FeatureFrame;

/// Row t of the result is [base_t, base_{t-1}, ..., base_{t-p}]; the first p
/// base rows have no complete history and are dropped. Column names gain a
/// `@lagk` suffix. Throws Error{insufficient_data} when p >= rows.
LaggedFrame build_lagged(const FeatureFrame& frame, std::size_t p);

// Channel frame builders. `days` must already be aligned to the trading
// calendar (one entry per trading day).
FeatureFrame count_frame(const std::vector<news::DailyNews>& days);
/// Days with no headlines are dropped.
FeatureFrame sentiment_frame(const std::vector<news::DailyNews>& days, const sentiment::Lexicon& lexicon);
/// MissingDay entries are dropped.
FeatureFrame embedding_frame(const std::vector<embed::PoolResult>& pooled);
/// HAR values are dated on the last day whose RV they contain (the day before
/// the HarFeatureRow day), so that a row dated t forecasts the label of t+1
/// like every other channel. `rv` supplies the calendar.
FeatureFrame har_frame(const std::vector<market::HarFeatureRow>& rows, const market::RvSeries& rv);

/// Column means and population standard deviations; zero-spread columns use 1.
class Standardizer {
public:
    static Standardizer fit(const Matrix& train_rows);
    /// Rebuilds a fitted standardizer; every std must be positive.
    static Standardizer from_parts(std::vector<double> means, std::vector<double> stds);

    Matrix apply(const Matrix& rows) const;
    std::vector<double> apply(std::span<const double> row) const;

    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& stds() const noexcept { return stds_; }

private:
    std::vector<double> means_;
    std::vector<double> stds_;
};

/// Rows of raw features paired with the next trading day's label. X stays
/// unstandardized; each training window fits its own Standardizer.
struct Dataset {
    Channel channel = Channel::count;
    std::vector<std::string> columns;
    std::vector<Date> dates;        // feature dates
    std::vector<Date> label_dates;  // strictly after dates[i]
    Matrix X;
    std::vector<int> y;
    std::size_t dropped_no_label = 0;
    std::size_t dropped_labels = 0;

    std::size_t rows() const noexcept { return y.size(); }
    /// Keeps only rows whose feature date is in `keep` (sorted).
    Dataset restrict_to(const std::vector<Date>& keep) const;
};

/// Pairs feature row t with the label of the next trading day in `calendar`
/// (sorted trading days). An empty calendar means the sorted union of feature
/// and label dates. Throws Error{alignment} when nothing pairs up.
Dataset align(const LaggedFrame& features, const market::LabelSeries& labels, std::vector<Date> calendar = {});

/// Feature-date intersection across datasets.
std::vector<Date> common_dates(const std::vector<Dataset>& datasets);

/// First line `#channel=<name>;lags=<p>`, then `date,<columns>`.
std::string frame_to_csv(const FeatureFrame& frame);
FeatureFrame frame_from_csv(std::string_view text);

}  // namespace oilvol::features
