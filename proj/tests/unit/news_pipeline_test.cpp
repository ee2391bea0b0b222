#include "oilvol/news_pipeline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace oilvol;
using namespace oilvol::news;

namespace {

Date day(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y} / m / d}; }

std::vector<std::string> kept_tokens(const std::string& text, const CleaningRules& rules = CleaningRules::defaults()) {
    auto r = clean_headline({day(2020, 3, 9), text}, rules);
    auto* h = std::get_if<CleanHeadline>(&r);
    return h ? h->tokens : std::vector<std::string>{};
}

CleanHeadline clean(Date d, std::vector<std::string> tokens) { return {d, std::move(tokens), "x"}; }

}  // namespace

TEST(Clean, UrlRemoved) {
    EXPECT_EQ(kept_tokens("Oil up http://x.co amid OPEC talks"),
              (std::vector<std::string>{"oil", "up", "amid", "opec", "talks"}));
}

TEST(Clean, TooShortDropped) {
    auto r = clean_headline({day(2020, 3, 9), "Oil up"}, CleaningRules::defaults());
    ASSERT_TRUE(std::holds_alternative<Dropped>(r));
    EXPECT_EQ(std::get<Dropped>(r).reason, DropReason::too_short);
}

TEST(Clean, EmailRemovedRestKept) {
    EXPECT_EQ(kept_tokens("Contact news@reuters.com for details on crude supply"),
              (std::vector<std::string>{"contact", "for", "details", "on", "crude", "supply"}));
}

TEST(Clean, UrlOnlyAndBoilerplateReasons) {
    auto u = clean_headline({day(2020, 3, 9), "https://example.com/a/b"}, CleaningRules::defaults());
    EXPECT_EQ(std::get<Dropped>(u).reason, DropReason::url_only);
    auto b = clean_headline({day(2020, 3, 9), "Click here for more information"}, CleaningRules::defaults());
    EXPECT_EQ(std::get<Dropped>(b).reason, DropReason::boilerplate);
}

TEST(Clean, DatesAndWireTagsStripped) {
    EXPECT_EQ(kept_tokens("(Reuters) Brent edges higher, 2020-03-09"),
              (std::vector<std::string>{"brent", "edges", "higher"}));
    EXPECT_EQ(kept_tokens("Brent edges higher on 9 March 2020 - Reuters"),
              (std::vector<std::string>{"brent", "edges", "higher", "on"}));
}

TEST(Clean, RulesFromJson) {
    auto rules = CleaningRules::from_json(R"({"extra_patterns": ["\\bupdate \\d+\\b"], "min_tokens": 2})");
    EXPECT_EQ(kept_tokens("UPDATE 2 crude rallies", rules), (std::vector<std::string>{"crude", "rallies"}));
    EXPECT_THROW(CleaningRules::from_json(R"({"extra_patterns": ["("]})"), Error);
    EXPECT_THROW(CleaningRules::from_json("[1]"), Error);
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("New Trump administration plan could boost oil drilling on remote Alaska reserve"),
              (std::vector<std::string>{"new", "trump", "administration", "plan", "could", "boost", "oil",
                                        "drilling", "on", "remote", "alaska", "reserve"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("OPEC+ meeting!"), (std::vector<std::string>{"opec+", "meeting"}));
    EXPECT_EQ(tokenize("\"Oil's\" (rally)"), (std::vector<std::string>{"oil's", "rally"}));
}

TEST(Clean, IdempotenceProperty) {
    const std::vector<std::string> pieces = {"Oil",  "crude,", "(Reuters)", "OPEC+", "prices!", "\"supply\"",
                                             "U.S.", "-",      "a",         "x@y.com", "2021-05-04", "www.x.org"};
    std::mt19937_64 rng(9);
    const auto rules = CleaningRules::defaults();
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) text += pieces[rng() % pieces.size()] + " ";
        auto first = clean_headline({day(2020, 1, 1), text}, rules);
        auto* h = std::get_if<CleanHeadline>(&first);
        if (!h) continue;
        std::string joined;
        for (const auto& t : h->tokens) joined += t + " ";
        auto second = clean_headline({day(2020, 1, 1), joined}, rules);
        ASSERT_TRUE(std::holds_alternative<CleanHeadline>(second)) << text;
        EXPECT_EQ(std::get<CleanHeadline>(second).tokens, h->tokens) << text;
    }
}

TEST(Group, CountsAndOrder) {
    std::vector<CleanHeadline> hs{clean(day(2020, 3, 9), {"a"}), clean(day(2020, 3, 10), {"b"}),
                                  clean(day(2020, 3, 9), {"c"}), clean(day(2020, 3, 9), {"c"})};
    auto days = group_by_day(hs);
    ASSERT_EQ(days.size(), 2u);
    EXPECT_EQ(days[0].count(), 3u);
    EXPECT_EQ(days[1].count(), 1u);
    EXPECT_EQ(days[0].headlines[0].tokens[0], "a");
    EXPECT_TRUE(group_by_day({}).empty());
}

TEST(Group, PermutationInvariantCountsAndConservation) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<CleanHeadline> hs;
        for (int i = 0; i < 40; ++i) {
            hs.push_back(clean(day(2020, 1, 1) + std::chrono::days{static_cast<int>(rng() % 7)}, {"t"}));
        }
        auto a = group_by_day(hs);
        std::shuffle(hs.begin(), hs.end(), rng);
        auto b = group_by_day(hs);
        ASSERT_EQ(a.size(), b.size());
        std::size_t total = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].day, b[i].day);
            EXPECT_EQ(a[i].count(), b[i].count());
            total += a[i].count();
        }
        EXPECT_EQ(total, hs.size());
    }
}

TEST(CountFeature, Examples) {
    std::vector<DailyNews> days{{day(2020, 1, 1), std::vector<CleanHeadline>(5)},
                                {day(2020, 1, 2), std::vector<CleanHeadline>(12)},
                                {day(2020, 1, 3), {}},
                                {day(2020, 1, 6), std::vector<CleanHeadline>(7)}};
    auto c = news_count_feature(days);
    ASSERT_EQ(c.size(), 4u);
    EXPECT_EQ(c[0].count, 5.0);
    EXPECT_EQ(c[1].count, 12.0);
    EXPECT_EQ(c[2].count, 0.0);
    EXPECT_EQ(c[3].count, 7.0);
}

TEST(Calendar, WeekendNewsMovesToNextTradingDay) {
    auto days = group_by_day({clean(day(2020, 3, 7), {"sat"}), clean(day(2020, 3, 9), {"mon"}),
                              clean(day(2020, 3, 20), {"late"})});
    auto a = align_to_calendar(days, {day(2020, 3, 6), day(2020, 3, 9), day(2020, 3, 10)});
    ASSERT_EQ(a.days.size(), 3u);
    EXPECT_EQ(a.days[0].count(), 0u);
    ASSERT_EQ(a.days[1].count(), 2u);
    EXPECT_EQ(a.days[1].headlines[0].tokens[0], "sat");
    EXPECT_EQ(a.days[1].headlines[0].date, day(2020, 3, 9));
    EXPECT_EQ(a.dropped_after_end, 1u);
}

TEST(Io, HeadlineCsv) {
    auto raw = parse_headlines("date,headline\n2020-03-09,\"Oil, gas rally\"\n");
    ASSERT_EQ(raw.size(), 1u);
    EXPECT_EQ(raw[0].text, "Oil, gas rally");
    EXPECT_THROW(parse_headlines("date,headline\n2020-03-09,  \n"), ParseError);
    EXPECT_THROW(parse_headlines("date,headline\n2020-13-09,x\n"), ParseError);

    auto s = clean_all(raw, CleaningRules::defaults());
    auto back = clean_headlines_from_csv(clean_headlines_to_csv(s.kept));
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].tokens, (std::vector<std::string>{"oil", "gas", "rally"}));
    EXPECT_EQ(back[0].original, "Oil, gas rally");
}
