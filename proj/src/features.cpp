#include "oilvol/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace oilvol::features {

std::string_view to_string(Channel c) {
    switch (c) {
        case Channel::count: return "count";
        case Channel::sentiment: return "sentiment";
        case Channel::embedding: return "embedding";
        case Channel::har: return "har";
    }
    return "unknown";
}

std::optional<Channel> channel_from_string(std::string_view s) {
    for (auto c : {Channel::count, Channel::sentiment, Channel::embedding, Channel::har}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

LaggedFrame build_lagged(const FeatureFrame& frame, std::size_t p) {
    if (p >= frame.rows()) {
        throw Error(ErrorKind::insufficient_data, "lag order " + std::to_string(p) + " needs more than " +
                                                      std::to_string(frame.rows()) + " rows");
    }
    LaggedFrame out;
    out.channel = frame.channel;
    out.lags = p;
    const std::size_t base_cols = frame.matrix.cols();
    for (std::size_t k = 0; k <= p; ++k) {
        for (const auto& c : frame.columns) out.columns.push_back(p == 0 ? c : c + "@lag" + std::to_string(k));
    }
    out.matrix = Matrix(frame.rows() - p, base_cols * (p + 1));
    for (std::size_t t = p; t < frame.rows(); ++t) {
        out.dates.push_back(frame.dates[t]);
        auto dst = out.matrix.row(t - p);
        for (std::size_t k = 0; k <= p; ++k) {
            auto src = frame.matrix.row(t - k);
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(k * base_cols));
        }
    }
    return out;
}

FeatureFrame count_frame(const std::vector<news::DailyNews>& days) {
    FeatureFrame f;
    f.channel = Channel::count;
    f.columns = {"count"};
    f.matrix = Matrix(0, 1);
    for (const auto& p : news::news_count_feature(days)) {
        f.dates.push_back(p.day);
        f.matrix.append_row(std::span<const double>(&p.count, 1));
    }
    return f;
}

FeatureFrame sentiment_frame(const std::vector<news::DailyNews>& days, const sentiment::Lexicon& lexicon) {
    FeatureFrame f;
    f.channel = Channel::sentiment;
    f.columns = {"sentiment"};
    f.matrix = Matrix(0, 1);
    std::vector<news::DailyNews> non_empty;
    for (const auto& d : days) {
        if (d.count() > 0) non_empty.push_back(d);
    }
    for (const auto& p : sentiment::daily_sentiment(non_empty, lexicon)) {
        f.dates.push_back(p.day);
        f.matrix.append_row(std::span<const double>(&p.score, 1));
    }
    return f;
}

FeatureFrame embedding_frame(const std::vector<embed::PoolResult>& pooled) {
    FeatureFrame f;
    f.channel = Channel::embedding;
    for (const auto& r : pooled) {
        const auto* day = std::get_if<embed::DailyEmbedding>(&r);
        if (!day) continue;
        if (f.columns.empty()) {
            for (std::size_t d = 0; d < day->vector.size(); ++d) f.columns.push_back("e" + std::to_string(d));
            f.matrix = Matrix(0, day->vector.size());
        }
        f.dates.push_back(day->day);
        f.matrix.append_row(day->vector);
    }
    return f;
}

FeatureFrame har_frame(const std::vector<market::HarFeatureRow>& rows, const market::RvSeries& rv) {
    FeatureFrame f;
    f.channel = Channel::har;
    f.columns = {"rv_daily", "rv_weekly", "rv_monthly"};
    f.matrix = Matrix(0, 3);
    for (const auto& row : rows) {
        auto it = std::lower_bound(rv.begin(), rv.end(), row.day,
                                   [](const market::RvEntry& e, Date d) { return e.day < d; });
        if (it == rv.begin() || it == rv.end() || it->day != row.day) continue;
        f.dates.push_back(std::prev(it)->day);
        const double vals[3] = {row.rv_daily, row.rv_weekly, row.rv_monthly};
        f.matrix.append_row(vals);
    }
    return f;
}

Standardizer Standardizer::fit(const Matrix& train_rows) {
    if (train_rows.rows() < 2) {
        throw Error(ErrorKind::insufficient_data, "standardizer needs at least 2 rows, got " +
                                                      std::to_string(train_rows.rows()));
    }
    Standardizer s;
    const std::size_t n = train_rows.rows(), m = train_rows.cols();
    s.means_.assign(m, 0.0);
    s.stds_.assign(m, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) s.means_[c] += train_rows(r, c);
    }
    for (auto& mu : s.means_) mu /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            const double d = train_rows(r, c) - s.means_[c];
            s.stds_[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < m; ++c) {
        const double sd = std::sqrt(s.stds_[c] / static_cast<double>(n));
        // Spread below rounding noise of the mean counts as constant.
        const double floor = 1e-12 * std::max(1.0, std::abs(s.means_[c]));
        s.stds_[c] = (sd > floor && std::isfinite(sd)) ? sd : 1.0;
    }
    return s;
}

Standardizer Standardizer::from_parts(std::vector<double> means, std::vector<double> stds) {
    if (means.size() != stds.size()) throw Error(ErrorKind::contract, "standardizer means/stds length mismatch");
    for (double s : stds) {
        if (!(s > 0.0)) throw Error(ErrorKind::validation, "standardizer stds must be positive");
    }
    Standardizer s;
    s.means_ = std::move(means);
    s.stds_ = std::move(stds);
    return s;
}

Matrix Standardizer::apply(const Matrix& rows) const {
    if (rows.cols() != means_.size() && !rows.empty()) {
        throw Error(ErrorKind::contract, "standardizer column count mismatch");
    }
    Matrix out(rows.rows(), rows.cols());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) out(r, c) = (rows(r, c) - means_[c]) / stds_[c];
    }
    return out;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
    if (row.size() != means_.size()) throw Error(ErrorKind::contract, "standardizer column count mismatch");
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - means_[c]) / stds_[c];
    return out;
}

Dataset Dataset::restrict_to(const std::vector<Date>& keep) const {
    Dataset out;
    out.channel = channel;
    out.columns = columns;
    out.X = Matrix(0, X.cols());
    out.dropped_no_label = dropped_no_label;
    out.dropped_labels = dropped_labels;
    for (std::size_t i = 0; i < rows(); ++i) {
        if (!std::binary_search(keep.begin(), keep.end(), dates[i])) continue;
        out.dates.push_back(dates[i]);
        out.label_dates.push_back(label_dates[i]);
        out.X.append_row(X.row(i));
        out.y.push_back(y[i]);
    }
    return out;
}

Dataset align(const LaggedFrame& features, const market::LabelSeries& labels, std::vector<Date> calendar) {
    if (calendar.empty()) {
        std::set<Date> all(features.dates.begin(), features.dates.end());
        for (const auto& l : labels) all.insert(l.day);
        calendar.assign(all.begin(), all.end());
    }
    std::map<Date, int> label_of;
    for (const auto& l : labels) label_of[l.day] = l.label;

    Dataset ds;
    ds.channel = features.channel;
    ds.columns = features.columns;
    ds.X = Matrix(0, features.matrix.cols());
    std::set<Date> used_labels;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const Date t = features.dates[i];
        auto it = std::upper_bound(calendar.begin(), calendar.end(), t);
        if (it == calendar.end()) {
            ++ds.dropped_no_label;
            continue;
        }
        auto lab = label_of.find(*it);
        if (lab == label_of.end()) {
            ++ds.dropped_no_label;
            continue;
        }
        ds.dates.push_back(t);
        ds.label_dates.push_back(*it);
        ds.X.append_row(features.matrix.row(i));
        ds.y.push_back(lab->second);
        used_labels.insert(*it);
    }
    ds.dropped_labels = labels.size() - used_labels.size();
    if (ds.rows() == 0) {
        throw Error(ErrorKind::alignment, "no feature row of channel '" + std::string(to_string(features.channel)) +
                                              "' has a next-day label");
    }
    return ds;
}

std::vector<Date> common_dates(const std::vector<Dataset>& datasets) {
    if (datasets.empty()) return {};
    std::vector<Date> acc = datasets.front().dates;
    for (std::size_t k = 1; k < datasets.size(); ++k) {
        std::vector<Date> next;
        std::set_intersection(acc.begin(), acc.end(), datasets[k].dates.begin(), datasets[k].dates.end(),
                              std::back_inserter(next));
        acc = std::move(next);
    }
    return acc;
}

std::string frame_to_csv(const FeatureFrame& frame) {
    std::string out = "#channel=" + std::string(to_string(frame.channel)) + ";lags=" + std::to_string(frame.lags) + "\n";
    out += "date";
    for (const auto& c : frame.columns) out += "," + csv_escape(c);
    out += "\n";
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out += format_date(frame.dates[r]);
        for (double v : frame.matrix.row(r)) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

FeatureFrame frame_from_csv(std::string_view text) {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos || !text.starts_with("#channel=")) {
        throw ParseError(1, "feature file must start with '#channel=<name>;lags=<p>'");
    }
    std::string header(text.substr(9, nl - 9));
    if (!header.empty() && header.back() == '\r') header.pop_back();
    auto semi = header.find(";lags=");
    auto channel = channel_from_string(header.substr(0, semi));
    if (!channel || semi == std::string::npos) throw ParseError(1, "bad channel header '" + header + "'");
    auto lags = parse_double(header.substr(semi + 6));
    if (!lags || *lags < 0) throw ParseError(1, "bad lag order in header");

    auto table = parse_csv(text.substr(nl + 1));
    if (table.records.empty() || table.records[0].empty() || table.records[0][0] != "date") {
        throw ParseError(2, "missing 'date,...' column header");
    }
    FeatureFrame f;
    f.channel = *channel;
    f.lags = static_cast<std::size_t>(*lags);
    f.columns.assign(table.records[0].begin() + 1, table.records[0].end());
    f.matrix = Matrix(0, f.columns.size());
    std::vector<double> row(f.columns.size());
    for (std::size_t i = 1; i < table.records.size(); ++i) {
        const auto& rec = table.records[i];
        const std::size_t line = table.line_numbers[i] + 1;
        if (rec.size() != f.columns.size() + 1) throw ParseError(line, "wrong number of fields");
        auto d = parse_date(rec[0]);
        if (!d) throw ParseError(line, "invalid date '" + rec[0] + "'");
        for (std::size_t c = 0; c < f.columns.size(); ++c) {
            auto v = parse_double(rec[c + 1]);
            if (!v) throw ParseError(line, "invalid number '" + rec[c + 1] + "'");
            row[c] = *v;
        }
        f.dates.push_back(*d);
        f.matrix.append_row(row);
    }
    return f;
}

}  // namespace oilvol::features
