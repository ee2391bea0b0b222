#include "oilvol/sentiment.hpp"

#include <cmath>
#include <sstream>

namespace oilvol::sentiment {

Lexicon::Lexicon(std::unordered_map<std::string, double> entries, std::set<std::string> negators)
    : entries_(std::move(entries)), negators_(std::move(negators)) {
    if (negators_.empty()) throw Error(ErrorKind::validation, "lexicon negator set must be non-empty");
    for (const auto& [tok, pol] : entries_) {
        if (!(pol >= -1.0 && pol <= 1.0)) {
            throw Error(ErrorKind::validation, "polarity for '" + tok + "' outside [-1, 1]");
        }
    }
}

std::set<std::string> Lexicon::default_negators() { return {"not", "no", "never", "n't"}; }

Lexicon Lexicon::parse(std::string_view text) {
    std::unordered_map<std::string, double> entries;
    std::set<std::string> negators = default_negators();
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(line_no, "expected token<TAB>polarity");
        std::string key = trim(line.substr(0, tab));
        std::string value = trim(line.substr(tab + 1));
        if (key == "@negator") {
            negators.insert(to_lower(value));
            continue;
        }
        auto pol = parse_double(value);
        if (!pol) throw ParseError(line_no, "invalid polarity '" + value + "'");
        if (!(*pol >= -1.0 && *pol <= 1.0)) throw ParseError(line_no, "polarity outside [-1, 1]");
        entries.emplace(to_lower(key), *pol);
    }
    return Lexicon(std::move(entries), std::move(negators));
}

const double* Lexicon::find(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
}

Lexicon Lexicon::negated() const {
    auto flipped = entries_;
    for (auto& [tok, pol] : flipped) pol = -pol;
    return Lexicon(std::move(flipped), negators_);
}

double lexicon_score(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
    double sum = 0.0;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const double* pol = lexicon.find(tokens[i]);
        if (!pol) continue;
        const bool negated = i > 0 && lexicon.is_negator(tokens[i - 1]);
        sum += negated ? -*pol : *pol;
        ++matched;
    }
    return matched == 0 ? 0.0 : sum / static_cast<double>(matched);
}

SentimentSeries daily_sentiment(const std::vector<news::DailyNews>& days, const Lexicon& lexicon) {
    SentimentSeries out;
    out.reserve(days.size());
    for (const auto& day : days) {
        double sum = 0.0;
        for (const auto& h : day.headlines) sum += lexicon_score(h.tokens, lexicon);
        double score = day.headlines.empty() ? 0.0 : sum / static_cast<double>(day.headlines.size());
        out.push_back({day.day, score});
    }
    return out;
}

}  // namespace oilvol::sentiment
