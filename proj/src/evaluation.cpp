#include "oilvol/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

namespace oilvol::eval {

std::vector<WindowPlan> plan_windows(std::size_t rows, const RollingConfig& config) {
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
        throw Error(ErrorKind::config, "train_fraction must lie in (0, 1)");
    }
    if (config.step == 0) throw Error(ErrorKind::config, "rolling step must be positive");
    const std::size_t window = config.window_rows.value_or(
        static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(rows))));
    if (window < config.min_window) {
        throw Error(ErrorKind::insufficient_data, "training window of " + std::to_string(window) +
                                                      " rows is below the minimum of " +
                                                      std::to_string(config.min_window));
    }
    if (rows < window + 1) {
        throw Error(ErrorKind::insufficient_data, "dataset of " + std::to_string(rows) + " rows cannot fill a " +
                                                      std::to_string(window) + "-row window plus one test day");
    }
    std::vector<WindowPlan> plans;
    for (std::size_t t = window; t < rows; t += config.step) {
        WindowPlan p;
        p.eval_row = t;
        p.train_end = t;
        p.train_begin = config.window_mode == WindowMode::sliding ? t - window : 0;
        plans.push_back(p);
    }
    return plans;
}

models::FittedEnsemble fit_window(const features::Dataset& dataset, const models::EnsembleSpec& spec,
                                  const WindowPlan& plan) {
    Matrix X = dataset.X.slice_rows(plan.train_begin, plan.train_end);
    std::span<const int> y(dataset.y.data() + plan.train_begin, plan.train_end - plan.train_begin);
    return models::fit_ensemble(X, y, spec);
}

namespace {

Prediction predict_one(const features::Dataset& dataset, const models::EnsembleSpec& spec, const WindowPlan& plan) {
    Prediction p;
    p.date = dataset.label_dates[plan.eval_row];
    p.actual = dataset.y[plan.eval_row];
    const auto first = dataset.y.begin() + static_cast<std::ptrdiff_t>(plan.train_begin);
    const auto last = dataset.y.begin() + static_cast<std::ptrdiff_t>(plan.train_end);
    if (std::all_of(first, last, [&](int v) { return v == *first; })) {
        p.predicted = *first;
        p.proba1 = *first;
        return p;
    }
    auto model = fit_window(dataset, spec, plan);
    auto vote = model.predict(dataset.X.row(plan.eval_row));
    p.predicted = vote.label;
    p.proba1 = vote.aggregated[1];
    return p;
}

}  // namespace

PredictionLog rolling_eval(const features::Dataset& dataset, const models::EnsembleSpec& spec,
                           const RollingConfig& config) {
    const auto plans = plan_windows(dataset.rows(), config);
    PredictionLog log;
    log.entries.resize(plans.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, plans.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < plans.size(); ++i) log.entries[i] = predict_one(dataset, spec, plans[i]);
        return log;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < plans.size(); i += workers) {
                    log.entries[i] = predict_one(dataset, spec, plans[i]);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return log;
}

MetricsReport classification_metrics(const PredictionLog& log) {
    if (log.entries.empty()) throw Error(ErrorKind::insufficient_data, "classification_metrics: empty log");
    std::size_t cm[2][2] = {{0, 0}, {0, 0}};  // [actual][predicted]
    for (const auto& e : log.entries) ++cm[e.actual][e.predicted];
    MetricsReport r;
    r.total = log.entries.size();
    r.support = {cm[0][0] + cm[0][1], cm[1][0] + cm[1][1]};
    r.accuracy = static_cast<double>(cm[0][0] + cm[1][1]) / static_cast<double>(r.total);
    for (int k = 0; k < 2; ++k) {
        const double tp = static_cast<double>(cm[k][k]);
        const double predicted = static_cast<double>(cm[0][k] + cm[1][k]);
        const double actual = static_cast<double>(r.support[k]);
        const double precision = predicted > 0 ? tp / predicted : 0.0;
        const double recall = actual > 0 ? tp / actual : 0.0;
        const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        const double weight = actual / static_cast<double>(r.total);
        r.precision += weight * precision;
        r.recall += weight * recall;
        r.f1 += weight * f1;
    }
    return r;
}

std::string_view to_string(McNemarMode m) { return m == McNemarMode::exact ? "exact" : "chi2_cc"; }

double mcnemar_exact_p(std::size_t b, std::size_t c) {
    const std::size_t n = b + c;
    if (n == 0) return 1.0;
    const std::size_t lo = std::min(b, c);
    // Sum in log space: log C(n, k) - n log 2.
    const double log_half_n = -static_cast<double>(n) * std::log(2.0);
    const double nd = static_cast<double>(n);
    double tail = 0.0;
    for (std::size_t k = 0; k <= lo; ++k) {
        const double kd = static_cast<double>(k);
        tail += std::exp(std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) + log_half_n);
    }
    return std::min(1.0, 2.0 * tail);
}

double chi2_1_sf(double x) {
    if (x <= 0.0) return 1.0;
    return std::erfc(std::sqrt(x / 2.0));
}

McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c) {
    McNemarResult r;
    r.b = b;
    r.c = c;
    const std::size_t n = b + c;
    r.p_exact = mcnemar_exact_p(b, c);
    if (n > 0) {
        const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
        r.chi2_statistic = diff > 0 ? diff * diff / static_cast<double>(n) : 0.0;
        r.p_chi2 = chi2_1_sf(r.chi2_statistic);
    }
    if (n == 0) {
        r.degenerate = true;
        r.mode = McNemarMode::exact;
        r.p_value = 1.0;
    } else if (n < kMcNemarExactBelow) {
        r.mode = McNemarMode::exact;
        r.p_value = r.p_exact;
    } else {
        r.mode = McNemarMode::chi2_cc;
        r.statistic = r.chi2_statistic;
        r.p_value = r.p_chi2;
    }
    return r;
}

McNemarResult mcnemar(const PredictionLog& log_a, const PredictionLog& log_b) {
    if (log_a.entries.size() != log_b.entries.size()) {
        throw Error(ErrorKind::contract, "mcnemar: logs have different lengths (" +
                                             std::to_string(log_a.entries.size()) + " vs " +
                                             std::to_string(log_b.entries.size()) + ")");
    }
    std::size_t b = 0, c = 0;
    for (std::size_t i = 0; i < log_a.entries.size(); ++i) {
        const auto& ea = log_a.entries[i];
        const auto& eb = log_b.entries[i];
        if (ea.date != eb.date) {
            throw Error(ErrorKind::contract, "mcnemar: date mismatch at entry " + std::to_string(i) + " (" +
                                                 format_date(ea.date) + " vs " + format_date(eb.date) + ")");
        }
        if (ea.actual != eb.actual) {
            throw Error(ErrorKind::contract, "mcnemar: logs disagree on the actual label for " + format_date(ea.date));
        }
        const bool a_ok = ea.predicted == ea.actual;
        const bool b_ok = eb.predicted == eb.actual;
        if (a_ok && !b_ok) ++b;
        if (!a_ok && b_ok) ++c;
    }
    return mcnemar_from_counts(b, c);
}

std::string log_to_csv(const PredictionLog& log) {
    std::string out = "date,predicted,actual,proba1\n";
    for (const auto& e : log.entries) {
        out += format_date(e.date) + "," + std::to_string(e.predicted) + "," + std::to_string(e.actual) + "," +
               format_double(e.proba1) + "\n";
    }
    return out;
}

PredictionLog log_from_csv(std::string_view text) {
    auto table = parse_csv(text);
    PredictionLog log;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& rec = table.records[i];
        const std::size_t line = table.line_numbers[i];
        if (i == 0 && !rec.empty() && rec[0] == "date") continue;
        if (rec.size() != 4) throw ParseError(line, "expected date,predicted,actual,proba1");
        auto d = parse_date(rec[0]);
        auto p = parse_double(rec[3]);
        auto bit = [](const std::string& s) { return s == "0" || s == "1"; };
        if (!d || !p || !bit(rec[1]) || !bit(rec[2])) throw ParseError(line, "malformed prediction row");
        if (!log.entries.empty() && log.entries.back().date >= *d) throw ParseError(line, "dates not increasing");
        log.entries.push_back({*d, rec[1] == "1", rec[2] == "1", *p});
    }
    return log;
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string metrics_table_csv(const std::vector<NamedMetrics>& rows) {
    std::string out = "model,accuracy,precision,recall,f1,support0,support1\n";
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        out += csv_escape(r.model) + "," + fixed4(m.accuracy) + "," + fixed4(m.precision) + "," + fixed4(m.recall) +
               "," + fixed4(m.f1) + "," + std::to_string(m.support[0]) + "," + std::to_string(m.support[1]) + "\n";
    }
    return out;
}

std::string mcnemar_triangle_csv(const std::vector<std::string>& models, const std::vector<PairwiseTest>& tests) {
    std::map<std::pair<std::string, std::string>, double> p;
    for (const auto& t : tests) {
        p[{t.model_a, t.model_b}] = t.result.p_value;
        p[{t.model_b, t.model_a}] = t.result.p_value;
    }
    std::string out = "model";
    for (const auto& m : models) out += "," + csv_escape(m);
    out += "\n";
    for (std::size_t i = 0; i < models.size(); ++i) {
        out += csv_escape(models[i]);
        for (std::size_t j = 0; j < models.size(); ++j) {
            out += ",";
            if (j < i) {
                auto it = p.find({models[i], models[j]});
                if (it != p.end()) out += fixed4(it->second);
            }
        }
        out += "\n";
    }
    return out;
}

}  // namespace oilvol::eval
