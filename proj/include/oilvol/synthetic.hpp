#pragma once

#include "oilvol/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace oilvol::synthetic {

/// Toy corpus with a planted predictive token. Labels are iid fair coin
/// flips; the planted token shows up in day t's news with probability
/// `p_planted_up` when label t+1 is 1 and `p_planted_down` otherwise.
struct FixtureSpec {
    std::size_t trading_days = 600;
    Date first_day = Date{std::chrono::year{2019} / 1 / 2};
    std::size_t dimension = 10;
    std::string planted_token = "surge";
    double p_planted_up = 0.9;
    double p_planted_down = 0.1;
    std::size_t min_headlines = 6;
    std::size_t max_headlines = 12;
    /// Coordinates of the planted token's vector; ordinary words use [0.2, 1.0].
    double planted_low = 8.0;
    double planted_high = 12.0;
    std::uint64_t seed = 7;
};

struct FixtureInfo {
    std::vector<Date> trading_days;
    std::vector<int> labels;  // labels[t] compares RV_t with RV_{t-1}; labels[0] unused
    std::vector<double> rv;
    std::size_t planted_days = 0;
    std::size_t headlines = 0;
};

/// Writes bars.csv, news.csv, vectors.txt, lexicon.tsv, stopwords.txt, and
/// config.json (outputs to `<dir>/out`) into `dir`.
FixtureInfo write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec = {});

}  // namespace oilvol::synthetic
