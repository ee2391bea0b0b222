#include "oilvol/synthetic.hpp"

#include "oilvol/market_data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace oilvol::synthetic {

namespace {

const std::vector<std::string> kVocabulary = {
    "oil",      "crude",     "brent",    "wti",      "opec",     "output",   "prices",    "barrel",
    "futures",  "traders",   "supply",   "demand",   "stocks",   "inventory", "refinery", "exports",
    "imports",  "shale",     "drilling", "rig",      "count",    "pipeline", "tanker",    "cargo",
    "gasoline", "diesel",    "fuel",     "market",   "analysts", "forecast", "quota",     "cut",
    "talks",    "meeting",   "saudi",    "russia",   "iran",     "iraq",     "libya",     "nigeria",
    "venezuela", "china",    "india",    "europe",   "asia",     "economy",  "growth",    "dollar",
    "rates",    "inflation", "storage",  "hedge",    "funds",    "producers", "field",    "offshore",
    "gulf",     "port",      "strait",   "shipping", "sanctions", "deal",    "report",    "data",
    "weekly",   "monthly",   "energy",   "agency",   "minister", "surplus",  "spare",     "capacity",
    "winter",   "summer",    "season",   "holds",    "steady",   "edges",    "week",      "session",
};

const std::vector<std::string> kFunctionWords = {"the", "a", "of", "to", "in", "on", "as", "for", "at", "by"};

const std::vector<std::pair<std::string, double>> kLexicon = {
    {"steady", 0.3}, {"growth", 0.5}, {"deal", 0.4},   {"cut", -0.4},     {"sanctions", -0.6},
    {"holds", 0.2},  {"edges", 0.1},  {"spare", 0.2},  {"inflation", -0.3}};

std::string bar_line(market::Timestamp ts, double price) {
    return market::format_timestamp(ts) + "," + format_double(price) + "\n";
}

}  // namespace

FixtureInfo write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec) {
    if (spec.trading_days < 60) throw Error(ErrorKind::config, "fixture needs at least 60 trading days");
    if (spec.min_headlines == 0 || spec.max_headlines < spec.min_headlines) {
        throw Error(ErrorKind::config, "fixture headline range is empty");
    }
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(unit(rng) * static_cast<double>(n)) % n; };

    FixtureInfo info;
    for (Date d = spec.first_day; info.trading_days.size() < spec.trading_days; d += std::chrono::days{1}) {
        const std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) info.trading_days.push_back(d);
    }
    const std::size_t n = spec.trading_days;

    // Direction labels first, then an RV path that honours them.
    info.labels.assign(n, 0);
    info.rv.assign(n, 0.0);
    info.rv[0] = 4e-4;
    for (std::size_t t = 1; t < n; ++t) {
        info.labels[t] = unit(rng) < 0.5 ? 1 : 0;
        const double jump = uniform(0.05, 0.4);
        info.rv[t] = info.rv[t - 1] * std::exp(info.labels[t] == 1 ? jump : -jump);
    }

    // 61 five-minute bars per day, 09:00 to 14:00 UTC; returns are rescaled so
    // their squares sum to the target RV.
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::string bars = "timestamp,price\n";
    double price = 60.0;
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<double> r(60);
        double ss = 0.0;
        for (auto& v : r) {
            v = gauss(rng);
            ss += v * v;
        }
        const double scale = std::sqrt(info.rv[t] / ss);
        market::Timestamp ts{std::chrono::sys_days{info.trading_days[t]} + std::chrono::hours{9}};
        bars += bar_line(ts, price);
        for (double v : r) {
            price *= std::exp(v * scale);
            ts += std::chrono::minutes{5};
            bars += bar_line(ts, price);
        }
    }
    write_file(dir / "bars.csv", bars);

    // Headlines.
    auto headline_words = [&]() {
        std::vector<std::string> words;
        const std::size_t len = 4 + pick(4);
        for (std::size_t i = 0; i < len; ++i) words.push_back(kVocabulary[pick(kVocabulary.size())]);
        const std::size_t fillers = pick(3);
        for (std::size_t i = 0; i < fillers; ++i) {
            words.insert(words.begin() + static_cast<std::ptrdiff_t>(pick(words.size() + 1)),
                         kFunctionWords[pick(kFunctionWords.size())]);
        }
        return words;
    };
    auto join = [](const std::vector<std::string>& words) {
        std::string s;
        for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
        return s;
    };
    auto capitalize = [](std::string s) {
        if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s;
    };

    std::string news = "date,headline\n";
    for (std::size_t t = 0; t < n; ++t) {
        const std::string date = format_date(info.trading_days[t]);
        const std::size_t count = spec.min_headlines + pick(spec.max_headlines - spec.min_headlines + 1);
        std::vector<std::vector<std::string>> heads(count);
        for (auto& h : heads) h = headline_words();
        if (t + 1 < n) {
            const double p = info.labels[t + 1] == 1 ? spec.p_planted_up : spec.p_planted_down;
            if (unit(rng) < p) {
                auto& h = heads[pick(count)];
                h.insert(h.begin() + static_cast<std::ptrdiff_t>(pick(h.size() + 1)), spec.planted_token);
                ++info.planted_days;
            }
        }
        for (std::size_t i = 0; i < heads.size(); ++i) {
            std::string text = capitalize(join(heads[i]));
            // Some wire-service decoration for the cleaner to strip.
            switch (pick(12)) {
                case 0: text = "(Reuters) " + text; break;
                case 1: text += " - Reuters"; break;
                case 2: text += ", " + date; break;
                default: break;
            }
            news += date + "," + csv_escape(text) + "\n";
            ++info.headlines;
        }
        // Occasional junk that must be dropped during cleaning.
        switch (pick(25)) {
            case 0: news += date + ",https://example.com/markets/oil-" + std::to_string(t) + "\n"; break;
            case 1: news += date + "," + csv_escape("Contact desk@example.com") + "\n"; break;
            case 2: news += date + ",Click here for more information\n"; break;
            default: break;
        }
    }
    write_file(dir / "news.csv", news);

    // Word vectors: ordinary words in [0.2, 1.0]^d, the planted token well away from them.
    std::string vectors = std::to_string(kVocabulary.size() + kFunctionWords.size() + 1) + " " +
                          std::to_string(spec.dimension) + "\n";
    auto vector_line = [&](const std::string& word, double lo, double hi) {
        std::string line = word;
        for (std::size_t k = 0; k < spec.dimension; ++k) line += " " + format_double(uniform(lo, hi));
        return line + "\n";
    };
    for (const auto& w : kVocabulary) vectors += vector_line(w, 0.2, 1.0);
    for (const auto& w : kFunctionWords) vectors += vector_line(w, 0.2, 1.0);
    vectors += vector_line(spec.planted_token, spec.planted_low, spec.planted_high);
    write_file(dir / "vectors.txt", vectors);

    std::string lexicon = "# token\tpolarity\n";
    for (const auto& [w, p] : kLexicon) lexicon += w + "\t" + format_double(p) + "\n";
    write_file(dir / "lexicon.tsv", lexicon);
    write_file(dir / "stopwords.txt", "# fixture additions\nweek\nsession\n");

    // Periods split the evaluated span into four parts so each has explained days.
    const std::size_t rows = n - market::kHarMonth;
    const std::size_t first_eval = market::kHarMonth - 1 + static_cast<std::size_t>(0.8 * static_cast<double>(rows));
    const std::size_t last_eval = n - 2;
    const std::size_t span = last_eval - first_eval + 1;
    const std::vector<std::string> names = {"pre_pandemic", "epidemic_shock", "epidemic_stabilization",
                                            "russia_ukraine_conflict"};
    nlohmann::ordered_json periods = nlohmann::ordered_json::array();
    std::string start = "1900-01-01";
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string end = i + 1 == names.size()
                                    ? std::string("2100-12-31")
                                    : format_date(info.trading_days[first_eval + span * (i + 1) / names.size() - 1]);
        periods.push_back({{"name", names[i]}, {"start", start}, {"end", end}});
        if (i + 1 < names.size()) {
            start = format_date(info.trading_days[first_eval + span * (i + 1) / names.size() - 1] + std::chrono::days{1});
        }
    }

    nlohmann::ordered_json config;
    config["inputs"] = {{"bars", "bars.csv"},       {"news", "news.csv"},           {"vectors", "vectors.txt"},
                        {"lexicon", "lexicon.tsv"}, {"stopwords", "stopwords.txt"}, {"cache", "cache/embeddings.tsv"}};
    config["output_dir"] = "out";
    config["channels"] = {"count", "sentiment", "embedding"};
    config["lags"] = 5;
    config["seed"] = 42;
    config["periods"] = periods;
    write_file(dir / "config.json", config.dump(2) + "\n");
    return info;
}

}  // namespace oilvol::synthetic
