#include "oilvol/explain.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

namespace oilvol::explain {

namespace {

std::vector<double> column_means(const Matrix& m) {
    std::vector<double> mu(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) mu[c] += m(r, c);
    }
    for (auto& v : mu) v /= static_cast<double>(m.rows());
    return mu;
}

ShapExplanation exact_shap(const ModelFn& model, std::span<const double> x, const std::vector<double>& mu) {
    const std::size_t d = x.size();
    const std::size_t n_coalitions = std::size_t{1} << d;
    std::vector<double> v(n_coalitions);
    std::vector<double> z(d);
    for (std::size_t mask = 0; mask < n_coalitions; ++mask) {
        for (std::size_t j = 0; j < d; ++j) z[j] = (mask >> j) & 1U ? x[j] : mu[j];
        v[mask] = model(z);
    }
    // |S|! (d - |S| - 1)! / d!
    std::vector<double> fact(d + 1, 1.0);
    for (std::size_t i = 1; i <= d; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> weight(d, 0.0);
    for (std::size_t s = 0; s < d; ++s) weight[s] = fact[s] * fact[d - s - 1] / fact[d];

    ShapExplanation out;
    out.exact = true;
    out.base_value = v[0];
    out.model_output = v[n_coalitions - 1];
    out.values.assign(d, 0.0);
    for (std::size_t mask = 0; mask < n_coalitions; ++mask) {
        const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
        for (std::size_t j = 0; j < d; ++j) {
            if ((mask >> j) & 1U) continue;
            out.values[j] += weight[size] * (v[mask | (std::size_t{1} << j)] - v[mask]);
        }
    }
    return out;
}

ShapExplanation sampled_shap(const ModelFn& model, std::span<const double> x, const std::vector<double>& mu,
                             const ShapConfig& config) {
    const std::size_t d = x.size();
    ShapExplanation out;
    out.exact = false;
    out.values.assign(d, 0.0);
    out.base_value = model(mu);
    out.model_output = model(x);
    const double delta = out.model_output - out.base_value;

    // Features already at their background mean contribute nothing.
    std::vector<std::size_t> varying;
    for (std::size_t j = 0; j < d; ++j) {
        if (x[j] != mu[j]) varying.push_back(j);
    }
    const std::size_t m = varying.size();
    if (m == 0) return out;
    if (m == 1) {
        out.values[varying[0]] = delta;
        return out;
    }

    // Coalition size s in [1, m-1] drawn with probability proportional to the
    // Shapley kernel mass (m-1)/(s(m-s)); each draw is paired with its complement.
    std::vector<double> size_mass(m - 1);
    for (std::size_t s = 1; s < m; ++s) {
        size_mass[s - 1] = static_cast<double>(m - 1) / static_cast<double>(s * (m - s));
    }
    std::mt19937_64 rng(config.seed);
    std::discrete_distribution<std::size_t> size_dist(size_mass.begin(), size_mass.end());

    std::map<std::vector<char>, double> coalitions;
    const std::size_t pairs = (config.n_samples + 1) / 2;
    std::vector<std::size_t> perm(m);
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t s = size_dist(rng) + 1;
        for (std::size_t i = 0; i < m; ++i) perm[i] = i;
        // Partial Fisher-Yates: the first s entries form the coalition.
        for (std::size_t i = 0; i < s; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, m - 1);
            std::swap(perm[i], perm[pick(rng)]);
        }
        std::vector<char> mask(m, 0);
        for (std::size_t i = 0; i < s; ++i) mask[perm[i]] = 1;
        coalitions[mask] += 1.0;
        for (auto& bit : mask) bit = static_cast<char>(!bit);
        coalitions[mask] += 1.0;
    }

    // Constrained WLS: eliminate the last varying feature via the efficiency
    // constraint sum(phi) = delta.
    const auto rows = static_cast<Eigen::Index>(coalitions.size());
    const auto cols = static_cast<Eigen::Index>(m - 1);
    Eigen::MatrixXd A(rows, cols);
    Eigen::VectorXd b(rows);
    Eigen::VectorXd w(rows);
    std::vector<double> z(mu);
    Eigen::Index r = 0;
    for (const auto& [mask, weight] : coalitions) {
        for (std::size_t i = 0; i < m; ++i) z[varying[i]] = mask[i] ? x[varying[i]] : mu[varying[i]];
        const double y = model(z) - out.base_value;
        const double last = mask[m - 1] ? 1.0 : 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) A(r, static_cast<Eigen::Index>(i)) = (mask[i] ? 1.0 : 0.0) - last;
        b(r) = y - last * delta;
        w(r) = weight;
        ++r;
    }
    const Eigen::VectorXd sw = w.array().sqrt();
    const Eigen::MatrixXd Aw = sw.asDiagonal() * A;
    const Eigen::VectorXd bw = sw.asDiagonal() * b;
    const Eigen::VectorXd phi = Aw.colPivHouseholderQr().solve(bw);

    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        out.values[varying[i]] = phi(static_cast<Eigen::Index>(i));
        partial += phi(static_cast<Eigen::Index>(i));
    }
    out.values[varying[m - 1]] = delta - partial;
    return out;
}

}  // namespace

ShapExplanation kernel_shap(const ModelFn& model, std::span<const double> x, const Matrix& background,
                            const ShapConfig& config) {
    if (background.empty()) throw Error(ErrorKind::contract, "kernel_shap: background set is empty");
    if (background.cols() != x.size()) throw Error(ErrorKind::contract, "kernel_shap: background width != x size");
    const auto mu = column_means(background);
    if (x.size() <= config.exact_max_dim) return exact_shap(model, x, mu);
    if (config.n_samples < 2 * x.size()) {
        throw Error(ErrorKind::config, "kernel_shap: n_samples = " + std::to_string(config.n_samples) +
                                           " is below 2 x dimension = " + std::to_string(2 * x.size()));
    }
    return sampled_shap(model, x, mu, config);
}

std::uint64_t day_seed(std::uint64_t global_seed, Date day) {
    std::uint64_t h = fnv1a64(format_date(day), 0xcbf29ce484222325ULL ^ global_seed);
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

std::vector<double> PoolingProportional::article_impacts(std::span<const double> values,
                                                         const embed::DailyEmbedding& day) const {
    const std::size_t n = day.article_vectors.size();
    if (n == 0) throw Error(ErrorKind::contract, "article_attribution: day has no article vectors");
    if (values.size() != day.vector.size()) {
        throw Error(ErrorKind::contract, "article_attribution: SHAP width != pooled vector width");
    }
    const double nd = static_cast<double>(n);
    std::vector<double> impact(n, 0.0);
    for (std::size_t d = 0; d < values.size(); ++d) {
        const double pooled = day.vector[d];
        for (std::size_t i = 0; i < n; ++i) {
            impact[i] += pooled != 0.0 ? values[d] * day.article_vectors[i][d] / (nd * pooled) : values[d] / nd;
        }
    }
    return impact;
}

std::vector<double> article_attribution(std::span<const double> values, const embed::DailyEmbedding& day,
                                        const AttributionStrategy& strategy) {
    return strategy.article_impacts(values, day);
}

Stopwords Stopwords::english() {
    static const char* const kWords[] = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as", "at",
        "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could",
        "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has",
        "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in",
        "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not",
        "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own",
        "same", "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
        "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until",
        "up", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
        "with", "would", "you", "your", "yours", "yourself", "yourselves", "says", "said", "amid", "via", "vs",
    };
    Stopwords s;
    for (const char* w : kWords) s.words_.insert(w);
    return s;
}

void Stopwords::add_from_text(std::string_view text) {
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (!line.empty()) add(line);
        start = end + 1;
    }
}

std::vector<WordImpact> word_attribution(std::span<const double> article_impacts,
                                         const std::vector<std::vector<std::string>>& article_tokens,
                                         const Stopwords& stopwords) {
    if (article_impacts.size() != article_tokens.size()) {
        throw Error(ErrorKind::contract, "word_attribution: one token list per article required");
    }
    std::map<std::string, std::pair<double, std::size_t>> acc;  // word -> (sum of shares, count)
    for (std::size_t i = 0; i < article_tokens.size(); ++i) {
        std::vector<const std::string*> meaningful;
        for (const auto& t : article_tokens[i]) {
            if (stopwords.meaningful(t)) meaningful.push_back(&t);
        }
        if (meaningful.empty()) continue;
        const double share = std::abs(article_impacts[i]) / static_cast<double>(meaningful.size());
        for (const auto* t : meaningful) {
            auto& slot = acc[*t];
            slot.first += share;
            slot.second += 1;
        }
    }
    std::vector<WordImpact> out;
    out.reserve(acc.size());
    for (const auto& [word, sc] : acc) {
        out.push_back({word, sc.first / static_cast<double>(sc.second), sc.second});
    }
    return out;
}

void validate_periods(const std::vector<PeriodSpec>& periods) {
    for (std::size_t i = 0; i < periods.size(); ++i) {
        if (periods[i].start > periods[i].end) {
            throw Error(ErrorKind::config, "period '" + periods[i].name + "' starts after it ends");
        }
        if (i > 0 && periods[i].start <= periods[i - 1].end) {
            throw Error(ErrorKind::config, "period '" + periods[i].name + "' overlaps or precedes '" +
                                               periods[i - 1].name + "'");
        }
    }
}

std::vector<PeriodSpec> default_periods() {
    auto d = [](const char* s) { return *parse_date(s); };
    return {
        {"pre_pandemic", d("1900-01-01"), d("2019-12-31")},
        {"epidemic_shock", d("2020-01-01"), d("2020-06-30")},
        {"epidemic_stabilization", d("2020-07-01"), d("2022-02-23")},
        {"russia_ukraine_conflict", d("2022-02-24"), d("2100-12-31")},
    };
}

PeriodReport period_report(const std::vector<DatedWordImpacts>& impacts, const std::vector<PeriodSpec>& periods,
                           std::size_t top_k) {
    validate_periods(periods);
    PeriodReport report;
    std::vector<std::map<std::string, std::pair<double, std::size_t>>> acc(periods.size());
    report.periods.reserve(periods.size());
    for (const auto& p : periods) report.periods.push_back({p, {}, 0});

    for (const auto& day : impacts) {
        auto it = std::find_if(periods.begin(), periods.end(),
                               [&](const PeriodSpec& p) { return p.start <= day.date && day.date <= p.end; });
        if (it == periods.end()) {
            ++report.unassigned_days;
            continue;
        }
        const auto k = static_cast<std::size_t>(it - periods.begin());
        ++report.periods[k].days;
        for (const auto& w : day.impacts) {
            auto& slot = acc[k][w.word];
            slot.first += w.mean_abs_impact * static_cast<double>(w.occurrence_count);
            slot.second += w.occurrence_count;
        }
    }

    for (std::size_t k = 0; k < periods.size(); ++k) {
        auto& words = report.periods[k].words;
        for (const auto& [word, sc] : acc[k]) {
            words.push_back({word, sc.first / static_cast<double>(sc.second), sc.second});
        }
        std::sort(words.begin(), words.end(), [](const WordImpact& a, const WordImpact& b) {
            if (a.mean_abs_impact != b.mean_abs_impact) return a.mean_abs_impact > b.mean_abs_impact;
            if (a.occurrence_count != b.occurrence_count) return a.occurrence_count > b.occurrence_count;
            return a.word < b.word;
        });
        if (words.size() > top_k) words.resize(top_k);
    }
    return report;
}

std::string ranking_to_csv(const PeriodRanking& ranking) {
    std::string out = "rank,word,mean_abs_impact,count\n";
    for (std::size_t i = 0; i < ranking.words.size(); ++i) {
        const auto& w = ranking.words[i];
        out += std::to_string(i + 1) + "," + csv_escape(w.word) + "," + format_double(w.mean_abs_impact) + "," +
               std::to_string(w.occurrence_count) + "\n";
    }
    return out;
}

std::string report_to_json(const PeriodReport& report) {
    nlohmann::ordered_json j;
    j["unassigned_days"] = report.unassigned_days;
    j["periods"] = nlohmann::ordered_json::array();
    for (const auto& p : report.periods) {
        nlohmann::ordered_json pj;
        pj["name"] = p.period.name;
        pj["start"] = format_date(p.period.start);
        pj["end"] = format_date(p.period.end);
        pj["days"] = p.days;
        pj["words"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < p.words.size(); ++i) {
            pj["words"].push_back({{"rank", i + 1},
                                   {"word", p.words[i].word},
                                   {"mean_abs_impact", p.words[i].mean_abs_impact},
                                   {"count", p.words[i].occurrence_count}});
        }
        j["periods"].push_back(std::move(pj));
    }
    return j.dump(2) + "\n";
}

}  // namespace oilvol::explain
