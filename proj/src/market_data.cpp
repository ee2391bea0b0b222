#include "oilvol/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace oilvol::market {

namespace {

std::optional<int> read_int(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

Date day_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') return std::nullopt;
    auto date = parse_date(text.substr(0, 10));
    auto hh = read_int(text.substr(11, 2));
    auto mm = read_int(text.substr(14, 2));
    if (!date || !hh || !mm || *hh > 23 || *mm > 59) return std::nullopt;

    std::string_view rest = text.substr(16);
    if (rest.size() >= 3 && rest[0] == ':') {
        auto ss = read_int(rest.substr(1, 2));
        if (!ss || *ss > 59) return std::nullopt;
        rest.remove_prefix(3);
    }
    int offset_minutes = 0;
    if (rest == "Z") {
        rest = {};
    } else if (!rest.empty()) {
        if (rest.size() != 6 || (rest[0] != '+' && rest[0] != '-') || rest[3] != ':') return std::nullopt;
        auto oh = read_int(rest.substr(1, 2));
        auto om = read_int(rest.substr(4, 2));
        if (!oh || !om) return std::nullopt;
        offset_minutes = (*oh * 60 + *om) * (rest[0] == '-' ? -1 : 1);
    }
    Timestamp local = std::chrono::time_point_cast<std::chrono::minutes>(*date) +
                      std::chrono::hours{*hh} + std::chrono::minutes{*mm};
    return local - std::chrono::minutes{offset_minutes};
}

std::string format_timestamp(Timestamp ts) {
    auto d = day_of(ts);
    auto minutes = (ts - std::chrono::time_point_cast<std::chrono::minutes>(d)).count();
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(minutes / 60), static_cast<int>(minutes % 60));
    return format_date(d) + "T" + buf;
}

BarSeries parse_bars(std::string_view raw_csv) {
    CsvTable table = parse_csv(raw_csv);
    BarSeries bars;
    std::vector<std::size_t> lines;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& rec = table.records[i];
        std::size_t line = table.line_numbers[i];
        if (i == 0 && !rec.empty() && trim(rec[0]) == "timestamp") continue;
        if (rec.size() != 2) throw ParseError(line, "expected 2 fields (timestamp,price)");
        auto ts = parse_timestamp(trim(rec[0]));
        if (!ts) throw ParseError(line, "invalid timestamp '" + rec[0] + "'");
        auto price = parse_double(rec[1]);
        if (!price || !std::isfinite(*price)) throw ParseError(line, "invalid price '" + rec[1] + "'");
        if (*price <= 0.0) {
            throw Error(ErrorKind::validation,
                        "line " + std::to_string(line) + ": price must be positive, got " + trim(rec[1]));
        }
        bars.push_back({*ts, *price});
        lines.push_back(line);
    }

    std::vector<std::size_t> order(bars.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return bars[a].timestamp < bars[b].timestamp; });
    BarSeries sorted;
    sorted.reserve(bars.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& bar = bars[order[k]];
        if (!sorted.empty() && sorted.back().timestamp == bar.timestamp) {
            throw ParseError(lines[order[k]], "duplicate timestamp " + format_timestamp(bar.timestamp));
        }
        sorted.push_back(bar);
    }
    return sorted;
}

ReturnsResult log_returns(const BarSeries& bars, int interval_minutes) {
    if (interval_minutes <= 0) throw Error(ErrorKind::contract, "interval_minutes must be positive");
    const std::chrono::minutes step{interval_minutes};
    ReturnsResult out;

    std::size_t i = 0;
    while (i < bars.size()) {
        const Date day = day_of(bars[i].timestamp);
        std::size_t j = i;
        while (j < bars.size() && day_of(bars[j].timestamp) == day) ++j;

        const auto midnight = std::chrono::time_point_cast<std::chrono::minutes>(day);
        auto first_grid = midnight + ((bars[i].timestamp - midnight + step - std::chrono::minutes{1}) / step) * step;
        auto last_grid = midnight + ((bars[j - 1].timestamp - midnight) / step) * step;

        std::vector<double> grid_prices;
        std::size_t cursor = i;
        for (auto g = first_grid; g <= last_grid; g += step) {
            while (cursor + 1 < j && bars[cursor + 1].timestamp <= g) ++cursor;
            grid_prices.push_back(bars[cursor].price);
        }

        if (grid_prices.size() < 2) {
            out.skipped.push_back({day, "fewer than 2 grid points (" + std::to_string(j - i) + " bars)"});
        } else {
            ReturnSeries rs{day, {}, interval_minutes};
            rs.returns.reserve(grid_prices.size() - 1);
            for (std::size_t k = 1; k < grid_prices.size(); ++k) {
                rs.returns.push_back(std::log(grid_prices[k] / grid_prices[k - 1]));
            }
            out.days.push_back(std::move(rs));
        }
        i = j;
    }
    return out;
}

RvSeries realized_variance(const std::vector<ReturnSeries>& returns) {
    RvSeries rv;
    rv.reserve(returns.size());
    for (const auto& day : returns) {
        if (day.returns.empty()) continue;
        double sum = 0.0;
        for (double r : day.returns) sum += r * r;
        rv.push_back({day.day, sum});
    }
    return rv;
}

LabelSeries direction_labels(const RvSeries& rv) {
    if (rv.size() < 2) {
        throw Error(ErrorKind::insufficient_data, "direction_labels needs at least 2 RV entries, got " +
                                                      std::to_string(rv.size()));
    }
    LabelSeries labels;
    labels.reserve(rv.size() - 1);
    for (std::size_t t = 1; t < rv.size(); ++t) {
        labels.push_back({rv[t].day, rv[t].rv > rv[t - 1].rv ? 1 : 0});
    }
    return labels;
}

std::vector<HarFeatureRow> har_features(const RvSeries& rv) {
    std::vector<HarFeatureRow> rows;
    for (std::size_t t = kHarMonth; t < rv.size(); ++t) {
        HarFeatureRow row;
        row.day = rv[t].day;
        row.rv_daily = rv[t - 1].rv;
        double week = 0.0, month = 0.0;
        for (std::size_t k = 1; k <= kHarMonth; ++k) {
            if (k <= kHarWeek) week += rv[t - k].rv;
            month += rv[t - k].rv;
        }
        row.rv_weekly = week / static_cast<double>(kHarWeek);
        row.rv_monthly = month / static_cast<double>(kHarMonth);
        rows.push_back(row);
    }
    return rows;
}

std::string rv_to_csv(const RvSeries& rv) {
    std::string out = "date,rv\n";
    for (const auto& e : rv) out += format_date(e.day) + "," + format_double(e.rv) + "\n";
    return out;
}

RvSeries rv_from_csv(std::string_view text) {
    auto table = parse_csv(text);
    RvSeries rv;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& rec = table.records[i];
        if (i == 0 && !rec.empty() && rec[0] == "date") continue;
        auto d = rec.size() == 2 ? parse_date(rec[0]) : std::nullopt;
        auto v = rec.size() == 2 ? parse_double(rec[1]) : std::nullopt;
        if (!d || !v || *v < 0.0) throw ParseError(table.line_numbers[i], "malformed rv row");
        if (!rv.empty() && rv.back().day >= *d) throw ParseError(table.line_numbers[i], "days not increasing");
        rv.push_back({*d, *v});
    }
    return rv;
}

std::string labels_to_csv(const LabelSeries& labels) {
    std::string out = "date,label\n";
    for (const auto& e : labels) out += format_date(e.day) + "," + std::to_string(e.label) + "\n";
    return out;
}

LabelSeries labels_from_csv(std::string_view text) {
    auto table = parse_csv(text);
    LabelSeries labels;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& rec = table.records[i];
        if (i == 0 && !rec.empty() && rec[0] == "date") continue;
        auto d = rec.size() == 2 ? parse_date(rec[0]) : std::nullopt;
        if (!d || (rec[1] != "0" && rec[1] != "1")) throw ParseError(table.line_numbers[i], "malformed label row");
        labels.push_back({*d, rec[1] == "1" ? 1 : 0});
    }
    return labels;
}

}  // namespace oilvol::market
