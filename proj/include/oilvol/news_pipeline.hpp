#pragma once

#include "oilvol/common.hpp"

#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oilvol::news {

struct RawHeadline {
    Date date;
    std::string text;
};

struct CleanHeadline {
    Date date;
    std::vector<std::string> tokens;
    std::string original;
};

struct DailyNews {
    Date day;
    std::vector<CleanHeadline> headlines;
    std::size_t count() const noexcept { return headlines.size(); }
};

enum class DropReason { url_only, too_short, boilerplate };
std::string_view to_string(DropReason r);

struct Dropped {
    DropReason reason;
};

using CleanResult = std::variant<CleanHeadline, Dropped>;

/// Regex and phrase rules applied before tokenization. Patterns are matched
/// case-insensitively and replaced by a space.
class CleaningRules {
public:
    /// URL, email, and date patterns plus the shipped boilerplate list.
    static CleaningRules defaults();
    /// JSON object: {"url_patterns": [...], "email_patterns": [...],
    /// "date_patterns": [...], "extra_patterns": [...], "boilerplate": [...],
    /// "min_tokens": n}. Missing keys keep their defaults.
    static CleaningRules from_json(std::string_view text);

    std::size_t min_tokens = 3;

    const std::vector<std::regex>& url_patterns() const { return url_; }
    const std::vector<std::regex>& email_patterns() const { return email_; }
    const std::vector<std::regex>& date_patterns() const { return date_; }
    const std::vector<std::regex>& extra_patterns() const { return extra_; }
    const std::vector<std::string>& boilerplate() const { return boilerplate_; }

private:
    std::vector<std::regex> url_, email_, date_, extra_;
    std::vector<std::string> boilerplate_;  // lowercase phrases
};

/// Lowercases, splits on whitespace, strips leading/trailing punctuation
/// (interior characters and '+', '$', '%', '&', '-' are kept).
std::vector<std::string> tokenize(std::string_view text);

CleanResult clean_headline(const RawHeadline& raw, const CleaningRules& rules);

/// One DailyNews per distinct date, ascending; within-day order follows input.
std::vector<DailyNews> group_by_day(const std::vector<CleanHeadline>& headlines);

struct CountPoint {
    Date day;
    double count = 0.0;
};
std::vector<CountPoint> news_count_feature(const std::vector<DailyNews>& days);

/// Moves news dated on non-trading days onto the next trading day in
/// `trading_days` (ascending). News after the last trading day is dropped and
/// tallied. Every trading day gets an entry, possibly empty.
struct CalendarAlignment {
    std::vector<DailyNews> days;
    std::size_t dropped_after_end = 0;
};
CalendarAlignment align_to_calendar(const std::vector<DailyNews>& days, const std::vector<Date>& trading_days);

/// CSV `date,headline` (RFC-4180). Rows whose trimmed text is empty raise a
/// ParseError since RawHeadline requires non-empty text.
std::vector<RawHeadline> parse_headlines(std::string_view csv);

/// `date,tokens,original` where tokens are space-joined.
std::string clean_headlines_to_csv(const std::vector<CleanHeadline>& headlines);
std::vector<CleanHeadline> clean_headlines_from_csv(std::string_view csv);

struct CleaningSummary {
    std::vector<CleanHeadline> kept;
    std::map<std::string, std::size_t> dropped;  // reason -> count
};
CleaningSummary clean_all(const std::vector<RawHeadline>& raw, const CleaningRules& rules);

}  // namespace oilvol::news
