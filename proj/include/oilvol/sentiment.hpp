#pragma once

#include "oilvol/common.hpp"
#include "oilvol/news_pipeline.hpp"

#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace oilvol::sentiment {

/// Token polarities in [-1, 1] plus the negator set. Immutable once built.
class Lexicon {
public:
    Lexicon(std::unordered_map<std::string, double> entries,
            std::set<std::string> negators = default_negators());

    /// Lines `token<TAB>polarity`; `#` starts a comment. Lines of the form
    /// `@negator<TAB>token` extend the negator set.
    static Lexicon parse(std::string_view text);
    static std::set<std::string> default_negators();

    const double* find(const std::string& token) const;
    bool is_negator(const std::string& token) const { return negators_.count(token) != 0; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Copy with every polarity multiplied by -1.
    Lexicon negated() const;

private:
    std::unordered_map<std::string, double> entries_;
    std::set<std::string> negators_;
};

/// Mean polarity over matched tokens; a token directly after a negator has its
/// polarity flipped. 0.0 when nothing matches.
double lexicon_score(const std::vector<std::string>& tokens, const Lexicon& lexicon);

struct SentimentPoint {
    Date day;
    double score = 0.0;
};
using SentimentSeries = std::vector<SentimentPoint>;

/// Per-day mean of headline scores; empty days score 0.0.
SentimentSeries daily_sentiment(const std::vector<news::DailyNews>& days, const Lexicon& lexicon);

}  // namespace oilvol::sentiment
