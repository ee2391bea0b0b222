#include "oilvol/news_pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>

namespace oilvol::news {

namespace {

constexpr auto kFlags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;

const char* const kMonths =
    "(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|"
    "sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\\.?";

std::vector<std::regex> compile(const std::vector<std::string>& patterns) {
    std::vector<std::regex> out;
    for (const auto& p : patterns) {
        try {
            out.emplace_back(p, kFlags);
        } catch (const std::regex_error& e) {
            throw Error(ErrorKind::config, "invalid cleaning pattern '" + p + "': " + e.what());
        }
    }
    return out;
}

std::vector<std::string> default_url_patterns() {
    return {R"((?:[a-z][a-z0-9+.\-]*://|www\.)\S+)"};
}
std::vector<std::string> default_email_patterns() {
    return {R"([a-z0-9._%+\-]+@[a-z0-9.\-]+\.[a-z]{2,})"};
}
std::vector<std::string> default_date_patterns() {
    const std::string m = kMonths;
    return {
        R"(\b\d{4}-\d{2}-\d{2}(?:[t ]\d{2}:\d{2}(?::\d{2})?z?)?\b)",
        R"(\b\d{1,2}\s+)" + m + R"(\s+\d{4}\b)",
        R"(\b)" + m + R"(\s+\d{1,2},?\s+\d{4}\b)",
    };
}
std::vector<std::string> default_boilerplate() {
    return {"(reuters)", "- reuters", "click here", "read more", "for more information",
            "all rights reserved", "subscribe now", "sign up for", "full story", "breaking news:"};
}

bool any_match(const std::vector<std::regex>& patterns, const std::string& text) {
    return std::any_of(patterns.begin(), patterns.end(),
                       [&](const std::regex& re) { return std::regex_search(text, re); });
}

std::string erase_all(const std::vector<std::regex>& patterns, std::string text) {
    for (const auto& re : patterns) text = std::regex_replace(text, re, " ");
    return text;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

/// Removes every whole-phrase occurrence of `phrase` from lowercase `text`.
bool erase_phrase(std::string& text, const std::string& phrase) {
    if (phrase.empty()) return false;
    bool hit = false;
    std::size_t pos = 0;
    while ((pos = text.find(phrase, pos)) != std::string::npos) {
        std::size_t end = pos + phrase.size();
        bool left_ok = pos == 0 || !is_word_char(text[pos - 1]) || !is_word_char(phrase.front());
        bool right_ok = end == text.size() || !is_word_char(text[end]) || !is_word_char(phrase.back());
        if (left_ok && right_ok) {
            text.replace(pos, phrase.size(), " ");
            hit = true;
            ++pos;
        } else {
            pos = end;
        }
    }
    return hit;
}

// ASCII punctuation removed from token edges. '+', '$', '%', '&', '-', '#', '@', '/' survive.
bool strippable(unsigned char c) {
    switch (c) {
        case '.': case ',': case ';': case ':': case '!': case '?': case '"': case '\'':
        case '(': case ')': case '[': case ']': case '{': case '}': case '<': case '>':
        case '*': case '`': case '|': case '~': case '_':
            return true;
        default:
            return false;
    }
}

// UTF-8 curly quotes and ellipsis are treated like ASCII edge punctuation.
constexpr std::string_view kUnicodePunct[] = {"“", "”", "‘", "’", "…", "«", "»"};

std::string strip_edges(std::string_view tok) {
    bool changed = true;
    while (changed && !tok.empty()) {
        changed = false;
        if (strippable(static_cast<unsigned char>(tok.front()))) {
            tok.remove_prefix(1);
            changed = true;
        } else if (strippable(static_cast<unsigned char>(tok.back()))) {
            tok.remove_suffix(1);
            changed = true;
        } else {
            for (auto p : kUnicodePunct) {
                if (tok.starts_with(p)) {
                    tok.remove_prefix(p.size());
                    changed = true;
                    break;
                }
                if (tok.ends_with(p)) {
                    tok.remove_suffix(p.size());
                    changed = true;
                    break;
                }
            }
        }
    }
    return std::string(tok);
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

}  // namespace

std::string_view to_string(DropReason r) {
    switch (r) {
        case DropReason::url_only: return "url_only";
        case DropReason::too_short: return "too_short";
        case DropReason::boilerplate: return "boilerplate";
    }
    return "unknown";
}

CleaningRules CleaningRules::defaults() {
    CleaningRules r;
    r.url_ = compile(default_url_patterns());
    r.email_ = compile(default_email_patterns());
    r.date_ = compile(default_date_patterns());
    r.boilerplate_ = default_boilerplate();
    return r;
}

CleaningRules CleaningRules::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, std::string("cleaning rules: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::config, "cleaning rules must be a JSON object");
    auto list = [&](const char* key, std::vector<std::string> fallback) {
        if (!j.contains(key)) return fallback;
        try {
            return j.at(key).get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorKind::config, std::string("cleaning rules: '") + key + "' must be a list of strings");
        }
    };
    CleaningRules r;
    r.url_ = compile(list("url_patterns", default_url_patterns()));
    r.email_ = compile(list("email_patterns", default_email_patterns()));
    r.date_ = compile(list("date_patterns", default_date_patterns()));
    r.extra_ = compile(list("extra_patterns", {}));
    for (const auto& phrase : list("boilerplate", default_boilerplate())) r.boilerplate_.push_back(to_lower(phrase));
    if (j.contains("min_tokens")) {
        if (!j["min_tokens"].is_number_unsigned()) throw Error(ErrorKind::config, "min_tokens must be >= 0");
        r.min_tokens = j["min_tokens"].get<std::size_t>();
    }
    return r;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& raw : split_whitespace(text)) {
        auto tok = strip_edges(to_lower(raw));
        if (!tok.empty()) out.push_back(std::move(tok));
    }
    return out;
}

CleanResult clean_headline(const RawHeadline& raw, const CleaningRules& rules) {
    std::string text = raw.text;
    const bool had_url = any_match(rules.url_patterns(), text);
    text = erase_all(rules.email_patterns(), std::move(text));
    text = erase_all(rules.url_patterns(), std::move(text));
    text = erase_all(rules.date_patterns(), std::move(text));
    text = erase_all(rules.extra_patterns(), std::move(text));

    text = to_lower(text);
    bool had_boilerplate = false;
    for (const auto& phrase : rules.boilerplate()) had_boilerplate |= erase_phrase(text, phrase);

    auto tokens = tokenize(text);
    if (tokens.size() < rules.min_tokens || tokens.empty()) {
        if (had_boilerplate) return Dropped{DropReason::boilerplate};
        if (had_url && tokens.empty()) return Dropped{DropReason::url_only};
        return Dropped{DropReason::too_short};
    }
    return CleanHeadline{raw.date, std::move(tokens), raw.text};
}

CleaningSummary clean_all(const std::vector<RawHeadline>& raw, const CleaningRules& rules) {
    CleaningSummary s;
    for (const auto& h : raw) {
        auto r = clean_headline(h, rules);
        if (auto* kept = std::get_if<CleanHeadline>(&r)) {
            s.kept.push_back(std::move(*kept));
        } else {
            ++s.dropped[std::string(to_string(std::get<Dropped>(r).reason))];
        }
    }
    return s;
}

std::vector<DailyNews> group_by_day(const std::vector<CleanHeadline>& headlines) {
    std::map<Date, std::vector<CleanHeadline>> by_day;
    for (const auto& h : headlines) by_day[h.date].push_back(h);
    std::vector<DailyNews> out;
    out.reserve(by_day.size());
    for (auto& [day, hs] : by_day) out.push_back({day, std::move(hs)});
    return out;
}

std::vector<CountPoint> news_count_feature(const std::vector<DailyNews>& days) {
    std::vector<CountPoint> out;
    out.reserve(days.size());
    for (const auto& d : days) out.push_back({d.day, static_cast<double>(d.count())});
    return out;
}

CalendarAlignment align_to_calendar(const std::vector<DailyNews>& days, const std::vector<Date>& trading_days) {
    CalendarAlignment out;
    out.days.reserve(trading_days.size());
    for (Date d : trading_days) out.days.push_back({d, {}});
    for (const auto& day : days) {
        auto it = std::lower_bound(trading_days.begin(), trading_days.end(), day.day);
        if (it == trading_days.end()) {
            out.dropped_after_end += day.count();
            continue;
        }
        auto& target = out.days[static_cast<std::size_t>(it - trading_days.begin())];
        for (auto h : day.headlines) {
            h.date = target.day;
            target.headlines.push_back(std::move(h));
        }
    }
    return out;
}

std::vector<RawHeadline> parse_headlines(std::string_view csv) {
    auto table = parse_csv(csv);
    std::vector<RawHeadline> out;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& rec = table.records[i];
        if (i == 0 && rec.size() == 2 && rec[0] == "date" && rec[1] == "headline") continue;
        if (rec.size() != 2) throw ParseError(table.line_numbers[i], "expected 2 fields (date,headline)");
        auto d = parse_date(trim(rec[0]));
        if (!d) throw ParseError(table.line_numbers[i], "invalid date '" + rec[0] + "'");
        if (trim(rec[1]).empty()) throw ParseError(table.line_numbers[i], "empty headline");
        out.push_back({*d, rec[1]});
    }
    return out;
}

std::string clean_headlines_to_csv(const std::vector<CleanHeadline>& headlines) {
    std::string out = "date,tokens,original\n";
    for (const auto& h : headlines) {
        out += format_date(h.date) + "," + csv_escape(join(h.tokens)) + "," + csv_escape(h.original) + "\n";
    }
    return out;
}

std::vector<CleanHeadline> clean_headlines_from_csv(std::string_view csv) {
    auto table = parse_csv(csv);
    std::vector<CleanHeadline> out;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& rec = table.records[i];
        if (i == 0 && !rec.empty() && rec[0] == "date") continue;
        if (rec.size() != 3) throw ParseError(table.line_numbers[i], "expected 3 fields (date,tokens,original)");
        auto d = parse_date(rec[0]);
        if (!d) throw ParseError(table.line_numbers[i], "invalid date '" + rec[0] + "'");
        out.push_back({*d, split_whitespace(rec[1]), rec[2]});
    }
    return out;
}

}  // namespace oilvol::news
