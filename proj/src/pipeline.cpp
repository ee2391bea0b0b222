#include "oilvol/pipeline.hpp"

#include "oilvol/classifiers.hpp"
#include "oilvol/evaluation.hpp"
#include "oilvol/market_data.hpp"
#include "oilvol/sentiment.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <thread>

namespace oilvol::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class DirLock {
public:
    explicit DirLock(const fs::path& dir) {
        fs::create_directories(dir);
        const auto path = dir / ".oilvol.lock";
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
        if (fd_ < 0) throw Error(ErrorKind::io, "cannot create lock file " + path.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw Error(ErrorKind::io, "output directory " + dir.string() + " is locked by another run");
        }
    }
    ~DirLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_ = -1;
};

/// Tracks artifacts written by a stage for the manifest.
class StageWriter {
public:
    StageWriter(const RunConfig& config) : config_(config) {}

    void write(const std::string& name, const std::string& contents) {
        write_file(config_.output_dir / name, contents);
        outputs_[name] = sha256_hex(contents);
    }
    void input(const std::string& role, const fs::path& path) {
        if (path.empty()) return;
        inputs_[role] = {path.string(), sha256_hex(read_file(path))};
    }
    const std::map<std::string, std::string>& outputs() const { return outputs_; }

    void update_manifest(Command stage) const {
        const auto path = config_.output_dir / "manifest.json";
        ordered_json m;
        if (fs::exists(path)) {
            try {
                m = ordered_json::parse(read_file(path));
            } catch (const nlohmann::json::exception&) {
                m = ordered_json::object();
            }
        }
        m["tool"] = "oilvol";
        m["version"] = kToolVersion;
        m["seed"] = config_.seed;
        m["config"] = ordered_json::parse(config_snapshot(config_));
        for (const auto& [role, info] : inputs_) m["inputs"][role] = {{"path", info.first}, {"sha256", info.second}};
        for (const auto& [name, hash] : outputs_) {
            m["outputs"][name] = {{"sha256", hash}, {"stage", std::string(to_string(stage))}};
        }
        // Stable key order regardless of stage order.
        for (const char* key : {"inputs", "outputs"}) {
            if (!m.contains(key)) continue;
            std::map<std::string, ordered_json> sorted;
            for (auto& [k, v] : m[key].items()) sorted[k] = v;
            ordered_json o = ordered_json::object();
            for (auto& [k, v] : sorted) o[k] = v;
            m[key] = o;
        }
        write_file(path, m.dump(2) + "\n");
    }

private:
    const RunConfig& config_;
    std::map<std::string, std::pair<std::string, std::string>> inputs_;
    std::map<std::string, std::string> outputs_;
};

fs::path artifact(const RunConfig& c, const std::string& name) { return c.output_dir / name; }

std::string require(const RunConfig& c, const std::string& name, Command needed_stage) {
    const auto p = artifact(c, name);
    if (!fs::is_regular_file(p)) {
        throw Error(ErrorKind::dependency, "missing upstream artifact '" + p.string() + "' (run '" +
                                               std::string(to_string(needed_stage)) + "' first)");
    }
    return read_file(p);
}

void check_config(const RunConfig& c, const InputNeeds& needs) {
    auto errors = validate(c, needs);
    if (errors.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw Error(ErrorKind::config, msg);
}

std::string features_file(const std::string& model) { return "features_" + model + ".csv"; }
std::string predictions_file(const std::string& model) { return "predictions_" + model + ".csv"; }

ordered_json report_header(const RunConfig& c) {
    ordered_json h;
    h["tool"] = "oilvol";
    h["version"] = kToolVersion;
    h["seed"] = c.seed;
    h["assumed_hyperparameters"] = {{"knn_k", c.ensemble.knn_k},
                                    {"naive_bayes", "gaussian"},
                                    {"var_floor", c.ensemble.var_floor},
                                    {"l2_lambda", c.ensemble.l2_lambda},
                                    {"voting_weights", c.ensemble.weights},
                                    {"lags", c.lags},
                                    {"train_fraction", c.rolling.train_fraction},
                                    {"step", c.rolling.step}};
    return h;
}

sentiment::Lexicon load_lexicon(const RunConfig& c) { return sentiment::Lexicon::parse(read_file(c.lexicon)); }

news::CleaningRules load_rules(const RunConfig& c) {
    if (c.cleaning_rules.empty()) return news::CleaningRules::defaults();
    return news::CleaningRules::from_json(read_file(c.cleaning_rules));
}

std::vector<std::string> stage_ingest(const RunConfig& c) {
    check_config(c, {.bars = true, .news = true});
    StageWriter w(c);
    w.input("bars", c.bars);
    w.input("news", c.news);
    w.input("cleaning_rules", c.cleaning_rules);

    const auto bars = market::parse_bars(read_file(c.bars));
    const auto returns = market::log_returns(bars, c.interval_minutes);
    const auto rv = market::realized_variance(returns.days);
    const auto labels = market::direction_labels(rv);

    const auto raw = news::parse_headlines(read_file(c.news));
    const auto cleaned = news::clean_all(raw, load_rules(c));

    w.write("rv.csv", market::rv_to_csv(rv));
    w.write("labels.csv", market::labels_to_csv(labels));
    w.write("news_clean.csv", news::clean_headlines_to_csv(cleaned.kept));

    ordered_json s;
    s["bars"] = bars.size();
    s["trading_days"] = rv.size();
    s["skipped_days"] = ordered_json::array();
    for (const auto& d : returns.skipped) s["skipped_days"].push_back({{"day", format_date(d.day)}, {"reason", d.reason}});
    s["headlines_raw"] = raw.size();
    s["headlines_kept"] = cleaned.kept.size();
    s["headlines_dropped"] = cleaned.dropped;
    w.write("ingest_summary.json", s.dump(2) + "\n");
    w.update_manifest(Command::ingest);
    std::vector<std::string> names;
    for (const auto& [n, h] : w.outputs()) names.push_back(n);
    return names;
}

std::vector<Date> calendar_of(const market::RvSeries& rv) {
    std::vector<Date> out;
    out.reserve(rv.size());
    for (const auto& e : rv) out.push_back(e.day);
    return out;
}

std::vector<std::string> stage_features(const RunConfig& c) {
    const bool need_vectors =
        std::find(c.channels.begin(), c.channels.end(), features::Channel::embedding) != c.channels.end();
    const bool need_lexicon =
        std::find(c.channels.begin(), c.channels.end(), features::Channel::sentiment) != c.channels.end();
    check_config(c, {.vectors = need_vectors, .lexicon = need_lexicon});
    StageWriter w(c);
    const auto rv = market::rv_from_csv(require(c, "rv.csv", Command::ingest));
    require(c, "news_clean.csv", Command::ingest);
    const auto days = load_calendar_news(c);

    ordered_json summary;
    for (auto ch : c.channels) {
        features::FeatureFrame base;
        switch (ch) {
            case features::Channel::count:
                base = features::count_frame(days);
                break;
            case features::Channel::sentiment:
                w.input("lexicon", c.lexicon);
                base = features::sentiment_frame(days, load_lexicon(c));
                break;
            case features::Channel::embedding:
                if (!c.provider) w.input("vectors", c.vectors);
                base = features::embedding_frame(pool_days(days, c));
                break;
            case features::Channel::har:
                continue;
        }
        const auto name = std::string(features::to_string(ch));
        auto lagged = features::build_lagged(base, c.lags);
        summary[name] = {{"base_rows", base.rows()},
                         {"missing_days", days.size() - base.rows()},
                         {"rows", lagged.rows()},
                         {"columns", lagged.columns.size()}};
        w.write(features_file(name), features::frame_to_csv(lagged));
    }
    auto har = features::har_frame(market::har_features(rv), rv);
    summary["har"] = {{"base_rows", har.rows()}, {"missing_days", 0}, {"rows", har.rows()}, {"columns", 3}};
    w.write(features_file("har"), features::frame_to_csv(har));
    w.write("features_summary.json", summary.dump(2) + "\n");
    w.update_manifest(Command::features);
    std::vector<std::string> names;
    for (const auto& [n, h] : w.outputs()) names.push_back(n);
    return names;
}

std::vector<std::string> stage_evaluate(const RunConfig& c) {
    check_config(c, {});
    StageWriter w(c);
    auto datasets = load_datasets(c);
    ordered_json report;
    report["header"] = report_header(c);
    report["models"] = ordered_json::object();
    std::vector<eval::NamedMetrics> table;
    for (const auto& name : model_names(c)) {
        const auto& ds = datasets.at(name);
        const auto log = eval::rolling_eval(ds, c.ensemble, c.rolling);
        const auto m = eval::classification_metrics(log);
        w.write(predictions_file(name), eval::log_to_csv(log));
        report["models"][name] = {{"accuracy", m.accuracy},   {"precision", m.precision}, {"recall", m.recall},
                                  {"f1", m.f1},               {"support0", m.support[0]}, {"support1", m.support[1]},
                                  {"predictions", m.total},   {"dataset_rows", ds.rows()},
                                  {"first_prediction", format_date(log.entries.front().date)},
                                  {"last_prediction", format_date(log.entries.back().date)}};
        table.push_back({name, m});
    }
    w.write("metrics.json", report.dump(2) + "\n");
    w.write("metrics_table.csv", eval::metrics_table_csv(table));
    w.update_manifest(Command::evaluate);
    std::vector<std::string> names;
    for (const auto& [n, h] : w.outputs()) names.push_back(n);
    return names;
}

std::vector<std::string> stage_mcnemar(const RunConfig& c) {
    check_config(c, {});
    StageWriter w(c);
    const auto names = model_names(c);
    std::map<std::string, eval::PredictionLog> logs;
    for (const auto& n : names) logs[n] = eval::log_from_csv(require(c, predictions_file(n), Command::evaluate));

    std::vector<eval::PairwiseTest> tests;
    ordered_json report;
    report["header"] = report_header(c);
    report["header"]["exact_below"] = eval::kMcNemarExactBelow;
    report["tests"] = ordered_json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            auto r = eval::mcnemar(logs.at(names[i]), logs.at(names[j]));
            tests.push_back({names[i], names[j], r});
            report["tests"].push_back({{"model_a", names[i]},
                                       {"model_b", names[j]},
                                       {"b", r.b},
                                       {"c", r.c},
                                       {"mode", std::string(eval::to_string(r.mode))},
                                       {"statistic", r.statistic ? ordered_json(*r.statistic) : ordered_json(nullptr)},
                                       {"p_value", r.p_value},
                                       {"p_exact", r.p_exact},
                                       {"chi2_statistic", r.chi2_statistic},
                                       {"p_chi2", r.p_chi2},
                                       {"degenerate", r.degenerate}});
        }
    }
    w.write("mcnemar.json", report.dump(2) + "\n");
    w.write("mcnemar_table.csv", eval::mcnemar_triangle_csv(names, tests));
    w.update_manifest(Command::mcnemar);
    std::vector<std::string> out;
    for (const auto& [n, h] : w.outputs()) out.push_back(n);
    return out;
}

std::string period_file(const std::string& period) { return "shap_" + period + ".csv"; }

std::vector<std::string> stage_explain(const RunConfig& c) {
    if (std::find(c.channels.begin(), c.channels.end(), features::Channel::embedding) == c.channels.end()) {
        throw Error(ErrorKind::config, "explain requires the 'embedding' channel to be enabled");
    }
    check_config(c, {.vectors = true});
    StageWriter w(c);
    if (!c.provider) w.input("vectors", c.vectors);
    w.input("stopwords", c.stopwords);
    const auto days = explain_embedding_days(c);

    std::vector<explain::DatedWordImpacts> dated;
    std::string per_day = "date,base_value,model_output,sum_values,exact\n";
    for (const auto& d : days) {
        double sum = 0.0;
        for (double v : d.shap.values) sum += v;
        per_day += format_date(d.shap.date) + "," + format_double(d.shap.base_value) + "," +
                   format_double(d.shap.model_output) + "," + format_double(sum) + "," + (d.shap.exact ? "1" : "0") + "\n";
        dated.push_back({d.shap.date, d.words});
    }
    const auto report = explain::period_report(dated, c.periods, c.top_k);
    for (const auto& p : report.periods) w.write(period_file(p.period.name), explain::ranking_to_csv(p));
    auto j = ordered_json::parse(explain::report_to_json(report));
    ordered_json full;
    full["header"] = report_header(c);
    full["header"]["shap_samples"] = c.shap_samples;
    full["header"]["background"] = c.shap_background;
    full["header"]["explained_days"] = days.size();
    for (auto& [k, v] : j.items()) full[k] = v;
    w.write("shap_report.json", full.dump(2) + "\n");
    w.write("shap_days.csv", per_day);
    w.update_manifest(Command::explain);
    std::vector<std::string> out;
    for (const auto& [n, h] : w.outputs()) out.push_back(n);
    return out;
}

}  // namespace

std::optional<Command> command_from_string(std::string_view s) {
    for (auto c : {Command::ingest, Command::features, Command::evaluate, Command::mcnemar, Command::explain,
                   Command::all}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

std::string_view to_string(Command c) {
    switch (c) {
        case Command::ingest: return "ingest";
        case Command::features: return "features";
        case Command::evaluate: return "evaluate";
        case Command::mcnemar: return "mcnemar";
        case Command::explain: return "explain";
        case Command::all: return "all";
    }
    return "unknown";
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::dependency: return 4;
        default: return 3;
    }
}

std::vector<std::string> model_names(const RunConfig& config) {
    std::vector<std::string> out;
    for (auto ch : config.channels) {
        if (ch != features::Channel::har) out.emplace_back(features::to_string(ch));
    }
    out.emplace_back("har");
    return out;
}

std::map<std::string, features::Dataset> load_datasets(const RunConfig& c) {
    const auto labels = market::labels_from_csv(require(c, "labels.csv", Command::ingest));
    const auto calendar = calendar_of(market::rv_from_csv(require(c, "rv.csv", Command::ingest)));
    std::vector<features::Dataset> all;
    const auto names = model_names(c);
    for (const auto& name : names) {
        auto frame = features::frame_from_csv(require(c, features_file(name), Command::features));
        all.push_back(features::align(frame, labels, calendar));
    }
    const auto common = features::common_dates(all);
    if (common.empty()) throw Error(ErrorKind::alignment, "channels share no feature dates");
    std::map<std::string, features::Dataset> out;
    for (std::size_t i = 0; i < names.size(); ++i) out.emplace(names[i], all[i].restrict_to(common));
    return out;
}

std::vector<news::DailyNews> load_calendar_news(const RunConfig& c) {
    const auto rv = market::rv_from_csv(require(c, "rv.csv", Command::ingest));
    const auto cleaned = news::clean_headlines_from_csv(require(c, "news_clean.csv", Command::ingest));
    return news::align_to_calendar(news::group_by_day(cleaned), calendar_of(rv)).days;
}

std::vector<embed::PoolResult> pool_days(const std::vector<news::DailyNews>& days, const RunConfig& c) {
    if (!c.provider) {
        const auto store = embed::load_vectors(read_file(c.vectors), c.vectors.filename().string());
        return embed::embed_days(days, store);
    }
    embed::EmbeddingProvider provider;
    provider.endpoint = c.provider->endpoint;
    provider.model_name = c.provider->model;
    provider.batch_size = c.provider->batch_size;
    provider.cache_path = c.cache;
    std::vector<std::string> texts;
    for (const auto& d : days) {
        for (const auto& h : d.headlines) texts.push_back(h.original);
    }
    const auto vectors = embed::remote_embed(texts, provider);
    std::vector<embed::PoolResult> out;
    std::size_t k = 0;
    for (const auto& d : days) {
        std::vector<embed::HeadlineVector> hv;
        for (std::size_t i = 0; i < d.headlines.size(); ++i) hv.emplace_back(vectors[k++]);
        out.push_back(embed::pool_daily(d, hv));
    }
    return out;
}

std::vector<DayExplanation> explain_embedding_days(const RunConfig& c) {
    const auto datasets = load_datasets(c);
    const auto& ds = datasets.at("embedding");
    const auto days = load_calendar_news(c);
    const auto pooled = pool_days(days, c);

    // Embedding-day index by date, with the news for each.
    std::vector<const embed::DailyEmbedding*> emb_days;
    std::vector<const news::DailyNews*> emb_news;
    std::map<Date, std::size_t> emb_index;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        if (const auto* e = std::get_if<embed::DailyEmbedding>(&pooled[i])) {
            emb_index[e->day] = emb_days.size();
            emb_days.push_back(e);
            emb_news.push_back(&days[i]);
        }
    }
    if (emb_days.empty()) throw Error(ErrorKind::insufficient_data, "no day has embedding coverage");
    const std::size_t dim = emb_days.front()->vector.size();
    if (ds.X.cols() != dim * (c.lags + 1)) {
        throw Error(ErrorKind::dependency, "features_embedding.csv width does not match lags=" + std::to_string(c.lags) +
                                               " and vector dimension " + std::to_string(dim) + "; rerun 'features'");
    }

    auto stopwords = explain::Stopwords::english();
    if (!c.stopwords.empty()) stopwords.add_from_text(read_file(c.stopwords));

    const auto plans = eval::plan_windows(ds.rows(), c.rolling);
    std::vector<DayExplanation> out(plans.size());
    std::vector<char> keep(plans.size(), 0);

    auto explain_one = [&](std::size_t idx) {
        const auto& plan = plans[idx];
        const auto first = ds.y.begin() + static_cast<std::ptrdiff_t>(plan.train_begin);
        const auto last = ds.y.begin() + static_cast<std::ptrdiff_t>(plan.train_end);
        if (std::all_of(first, last, [&](int v) { return v == *first; })) return;  // constant model
        const Date date = ds.dates[plan.eval_row];
        const auto model = eval::fit_window(ds, c.ensemble, plan);

        // Background rows sampled without replacement from the training window.
        const std::uint64_t seed = explain::day_seed(c.seed, date);
        std::vector<std::size_t> rows(plan.train_end - plan.train_begin);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = plan.train_begin + i;
        std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
            std::swap(rows[i], rows[pick(rng)]);
        }
        rows.resize(std::min(rows.size(), c.shap_background));
        std::sort(rows.begin(), rows.end());
        const Matrix background = ds.X.select_rows(rows);

        explain::ShapConfig sc;
        sc.n_samples = c.shap_samples;
        sc.seed = seed;
        auto fn = [&model](std::span<const double> x) { return model.predict_proba1(x); };
        auto shap = explain::kernel_shap(fn, ds.X.row(plan.eval_row), background, sc);
        shap.date = date;

        auto it = emb_index.find(date);
        if (it == emb_index.end() || it->second < c.lags) {
            throw Error(ErrorKind::dependency, "no pooled embedding history for " + format_date(date) + "; rerun 'features'");
        }
        DayExplanation de;
        std::map<std::string, std::pair<double, std::size_t>> acc;
        for (std::size_t k = 0; k <= c.lags; ++k) {
            const std::size_t day_idx = it->second - k;
            const auto& day = *emb_days[day_idx];
            std::span<const double> block(shap.values.data() + k * dim, dim);
            const auto impacts = explain::article_attribution(block, day);
            std::vector<std::vector<std::string>> tokens;
            for (auto hi : day.headline_index) tokens.push_back(emb_news[day_idx]->headlines[hi].tokens);
            for (std::size_t a = 0; a < impacts.size(); ++a) {
                bool has_meaningful = std::any_of(tokens[a].begin(), tokens[a].end(),
                                                  [&](const std::string& t) { return stopwords.meaningful(t); });
                if (has_meaningful) de.article_mass += std::abs(impacts[a]);
            }
            for (const auto& wi : explain::word_attribution(impacts, tokens, stopwords)) {
                auto& slot = acc[wi.word];
                slot.first += wi.mean_abs_impact * static_cast<double>(wi.occurrence_count);
                slot.second += wi.occurrence_count;
                de.word_mass += wi.mean_abs_impact * static_cast<double>(wi.occurrence_count);
            }
        }
        for (const auto& [word, sc2] : acc) {
            de.words.push_back({word, sc2.first / static_cast<double>(sc2.second), sc2.second});
        }
        de.shap = std::move(shap);
        out[idx] = std::move(de);
        keep[idx] = 1;
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(c.rolling.threads, plans.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < plans.size(); ++i) explain_one(i);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t wk = 0; wk < workers; ++wk) {
            pool.emplace_back([&, wk] {
                try {
                    for (std::size_t i = wk; i < plans.size(); i += workers) explain_one(i);
                } catch (...) {
                    errors[wk] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    std::vector<DayExplanation> result;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (keep[i]) result.push_back(std::move(out[i]));
    }
    return result;
}

std::vector<std::string> run(const RunConfig& config, Command command) {
    DirLock lock(config.output_dir);
    std::vector<std::string> written;
    auto add = [&](std::vector<std::string> v) { written.insert(written.end(), v.begin(), v.end()); };
    switch (command) {
        case Command::ingest: add(stage_ingest(config)); break;
        case Command::features: add(stage_features(config)); break;
        case Command::evaluate: add(stage_evaluate(config)); break;
        case Command::mcnemar: add(stage_mcnemar(config)); break;
        case Command::explain: add(stage_explain(config)); break;
        case Command::all:
            add(stage_ingest(config));
            add(stage_features(config));
            add(stage_evaluate(config));
            add(stage_mcnemar(config));
            if (std::find(config.channels.begin(), config.channels.end(), features::Channel::embedding) !=
                config.channels.end()) {
                add(stage_explain(config));
            }
            break;
    }
    written.push_back("manifest.json");
    return written;
}

}  // namespace oilvol::cli
