#pragma once

#include "oilvol/common.hpp"

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace oilvol::market {

using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

struct Bar {
    Timestamp timestamp;
    double price = 0.0;
};

/// Bars with strictly increasing timestamps and positive prices.
using BarSeries = std::vector<Bar>;

struct ReturnSeries {
    Date day;
    std::vector<double> returns;
    int interval_minutes = 5;
};

struct SkippedDay {
    Date day;
    std::string reason;
};

struct ReturnsResult {
    std::vector<ReturnSeries> days;
    std::vector<SkippedDay> skipped;
};

struct RvEntry {
    Date day;
    double rv = 0.0;
};
using RvSeries = std::vector<RvEntry>;

struct LabelEntry {
    Date day;
    int label = 0;
};
using LabelSeries = std::vector<LabelEntry>;

struct HarFeatureRow {
    Date day;
    double rv_daily = 0.0;    // RV_{t-1}
    double rv_weekly = 0.0;   // mean RV_{t-5..t-1}
    double rv_monthly = 0.0;  // mean RV_{t-22..t-1}
};

inline constexpr std::size_t kHarWeek = 5;
inline constexpr std::size_t kHarMonth = 22;

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM|-HH:MM]`; no zone means UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// CSV with header `timestamp,price`. Rows may be unordered; output is sorted.
/// Throws ParseError (with line number) on malformed rows or duplicate
/// timestamps and Error{validation} on non-positive prices.
BarSeries parse_bars(std::string_view raw_csv);

/// Snaps each calendar day's bars onto an `interval_minutes` grid (last
/// observation at or before each grid point) and takes consecutive log
/// differences. Overnight returns are never formed.
ReturnsResult log_returns(const BarSeries& bars, int interval_minutes = 5);

/// Sum of squared intraday returns per day; days with no returns are omitted.
RvSeries realized_variance(const std::vector<ReturnSeries>& returns);

/// label_t = 1 iff RV_t > RV_{t-1}. Output has one fewer entry than input.
LabelSeries direction_labels(const RvSeries& rv);

/// One row per day index t >= 22, built only from RV strictly before t.
std::vector<HarFeatureRow> har_features(const RvSeries& rv);

std::string rv_to_csv(const RvSeries& rv);
RvSeries rv_from_csv(std::string_view text);
std::string labels_to_csv(const LabelSeries& labels);
LabelSeries labels_from_csv(std::string_view text);

}  // namespace oilvol::market
