#include "oilvol/config.hpp"

#include <json.hpp>

#include <set>

namespace oilvol::cli {

namespace {

using nlohmann::json;

std::string join_lines(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) out += "\n  - " + e;
    return out;
}

class Reader {
public:
    Reader(const json& root, std::filesystem::path base_dir) : root_(root), base_dir_(std::move(base_dir)) {}

    template <class T>
    void get(const json& obj, const char* key, const std::string& path, T& out) {
        if (!obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            errors.push_back(path + ": wrong type (" + obj.at(key).dump() + ")");
        }
    }

    void get_path(const json& obj, const char* key, const std::string& path, std::filesystem::path& out) {
        std::string s;
        if (!obj.contains(key)) return;
        get(obj, key, path, s);
        if (s.empty()) return;
        std::filesystem::path p(s);
        out = p.is_relative() && !base_dir_.empty() ? base_dir_ / p : p;
    }

    void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) {
            errors.push_back(path + ": expected an object");
            return;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : obj.items()) {
            if (!ok.count(k)) errors.push_back((path.empty() ? k : path + "." + k) + ": unknown key");
        }
    }

    std::vector<std::string> errors;

private:
    const json& root_;
    std::filesystem::path base_dir_;
};

}  // namespace

RunConfig config_from_json(std::string_view text, RunConfig base, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
    Reader r(root, base_dir);
    RunConfig c = std::move(base);
    r.check_keys(root, "",
                 {"inputs", "provider", "output_dir", "channels", "lags", "interval_minutes", "ensemble", "rolling",
                  "shap", "periods", "seed"});
    if (!r.errors.empty()) throw Error(ErrorKind::config, "invalid config:" + join_lines(r.errors));

    if (root.contains("inputs")) {
        const auto& in = root["inputs"];
        r.check_keys(in, "inputs", {"bars", "news", "vectors", "lexicon", "cleaning_rules", "stopwords", "cache"});
        if (in.is_object()) {
            r.get_path(in, "bars", "inputs.bars", c.bars);
            r.get_path(in, "news", "inputs.news", c.news);
            r.get_path(in, "vectors", "inputs.vectors", c.vectors);
            r.get_path(in, "lexicon", "inputs.lexicon", c.lexicon);
            r.get_path(in, "cleaning_rules", "inputs.cleaning_rules", c.cleaning_rules);
            r.get_path(in, "stopwords", "inputs.stopwords", c.stopwords);
            r.get_path(in, "cache", "inputs.cache", c.cache);
        }
    }
    if (root.contains("provider") && !root["provider"].is_null()) {
        const auto& p = root["provider"];
        r.check_keys(p, "provider", {"endpoint", "model", "batch_size"});
        ProviderConfig pc;
        if (p.is_object()) {
            r.get(p, "endpoint", "provider.endpoint", pc.endpoint);
            r.get(p, "model", "provider.model", pc.model);
            r.get(p, "batch_size", "provider.batch_size", pc.batch_size);
        }
        c.provider = pc;
    }
    r.get_path(root, "output_dir", "output_dir", c.output_dir);
    if (root.contains("channels")) {
        std::vector<std::string> names;
        r.get(root, "channels", "channels", names);
        c.channels.clear();
        for (const auto& n : names) {
            auto ch = features::channel_from_string(n);
            if (!ch) {
                r.errors.push_back("channels: unknown channel '" + n + "'");
            } else if (*ch != features::Channel::har) {
                c.channels.push_back(*ch);
            }
        }
    }
    r.get(root, "lags", "lags", c.lags);
    r.get(root, "interval_minutes", "interval_minutes", c.interval_minutes);
    if (root.contains("ensemble")) {
        const auto& e = root["ensemble"];
        r.check_keys(e, "ensemble", {"knn_k", "l2_lambda", "var_floor", "lr_tol", "lr_max_iter", "weights"});
        if (e.is_object()) {
            r.get(e, "knn_k", "ensemble.knn_k", c.ensemble.knn_k);
            r.get(e, "l2_lambda", "ensemble.l2_lambda", c.ensemble.l2_lambda);
            r.get(e, "var_floor", "ensemble.var_floor", c.ensemble.var_floor);
            r.get(e, "lr_tol", "ensemble.lr_tol", c.ensemble.lr_tol);
            r.get(e, "lr_max_iter", "ensemble.lr_max_iter", c.ensemble.lr_max_iter);
            r.get(e, "weights", "ensemble.weights", c.ensemble.weights);
        }
    }
    if (root.contains("rolling")) {
        const auto& ro = root["rolling"];
        r.check_keys(ro, "rolling", {"train_fraction", "step", "window_mode", "window_rows", "min_window", "threads"});
        if (ro.is_object()) {
            r.get(ro, "train_fraction", "rolling.train_fraction", c.rolling.train_fraction);
            r.get(ro, "step", "rolling.step", c.rolling.step);
            r.get(ro, "min_window", "rolling.min_window", c.rolling.min_window);
            r.get(ro, "threads", "rolling.threads", c.rolling.threads);
            if (ro.contains("window_rows") && !ro["window_rows"].is_null()) {
                std::size_t w = 0;
                r.get(ro, "window_rows", "rolling.window_rows", w);
                c.rolling.window_rows = w;
            }
            std::string mode;
            r.get(ro, "window_mode", "rolling.window_mode", mode);
            if (mode == "sliding") c.rolling.window_mode = eval::WindowMode::sliding;
            else if (mode == "expanding") c.rolling.window_mode = eval::WindowMode::expanding;
            else if (!mode.empty()) r.errors.push_back("rolling.window_mode: must be 'sliding' or 'expanding'");
        }
    }
    if (root.contains("shap")) {
        const auto& s = root["shap"];
        r.check_keys(s, "shap", {"n_samples", "background", "top_k"});
        if (s.is_object()) {
            r.get(s, "n_samples", "shap.n_samples", c.shap_samples);
            r.get(s, "background", "shap.background", c.shap_background);
            r.get(s, "top_k", "shap.top_k", c.top_k);
        }
    }
    if (root.contains("periods")) {
        if (!root["periods"].is_array()) {
            r.errors.push_back("periods: expected a list");
        } else {
            c.periods.clear();
            for (std::size_t i = 0; i < root["periods"].size(); ++i) {
                const auto& p = root["periods"][i];
                const std::string path = "periods[" + std::to_string(i) + "]";
                r.check_keys(p, path, {"name", "start", "end"});
                std::string name, start, end;
                r.get(p, "name", path + ".name", name);
                r.get(p, "start", path + ".start", start);
                r.get(p, "end", path + ".end", end);
                auto ds = parse_date(start), de = parse_date(end);
                if (!ds) r.errors.push_back(path + ".start: expected YYYY-MM-DD");
                if (!de) r.errors.push_back(path + ".end: expected YYYY-MM-DD");
                if (ds && de) c.periods.push_back({name, *ds, *de});
            }
        }
    }
    r.get(root, "seed", "seed", c.seed);

    if (!r.errors.empty()) throw Error(ErrorKind::config, "invalid config:" + join_lines(r.errors));
    return c;
}

std::vector<std::string> validate(const RunConfig& c, const InputNeeds& needs) {
    std::vector<std::string> errors;
    auto need_file = [&](bool needed, const std::filesystem::path& p, const char* name) {
        if (!needed) return;
        if (p.empty()) errors.push_back(std::string(name) + ": path not set");
        else if (!std::filesystem::is_regular_file(p)) errors.push_back(std::string(name) + ": no such file '" + p.string() + "'");
    };
    need_file(needs.bars, c.bars, "inputs.bars");
    need_file(needs.news, c.news, "inputs.news");
    need_file(needs.lexicon, c.lexicon, "inputs.lexicon");
    if (needs.vectors && !c.provider) need_file(true, c.vectors, "inputs.vectors");
    if (!c.cleaning_rules.empty()) need_file(true, c.cleaning_rules, "inputs.cleaning_rules");
    if (!c.stopwords.empty()) need_file(true, c.stopwords, "inputs.stopwords");
    if (c.provider) {
        if (c.provider->endpoint.find("://") == std::string::npos) errors.push_back("provider.endpoint: needs a URL scheme");
        if (c.provider->model.empty()) errors.push_back("provider.model: must be set");
        if (c.provider->batch_size == 0) errors.push_back("provider.batch_size: must be >= 1");
        if (c.cache.empty()) errors.push_back("inputs.cache: required when a provider is configured");
    }
    if (c.output_dir.empty()) errors.push_back("output_dir: must be set");
    if (c.channels.empty()) errors.push_back("channels: at least one news channel is required");
    if (c.interval_minutes <= 0) errors.push_back("interval_minutes: must be positive");
    if (c.ensemble.knn_k == 0 || c.ensemble.knn_k % 2 == 0) errors.push_back("ensemble.knn_k: must be a positive odd integer");
    if (!(c.ensemble.l2_lambda >= 0)) errors.push_back("ensemble.l2_lambda: must be >= 0");
    if (!(c.ensemble.var_floor > 0)) errors.push_back("ensemble.var_floor: must be > 0");
    if (!(c.ensemble.lr_tol > 0)) errors.push_back("ensemble.lr_tol: must be > 0");
    if (c.ensemble.lr_max_iter == 0) errors.push_back("ensemble.lr_max_iter: must be >= 1");
    if (c.ensemble.weights.size() != 3) {
        errors.push_back("ensemble.weights: need exactly 3 weights (logistic, naive_bayes, knn)");
    } else {
        double total = 0;
        bool negative = false;
        for (double w : c.ensemble.weights) {
            negative |= !(w >= 0);
            total += w;
        }
        if (negative || !(total > 0)) errors.push_back("ensemble.weights: must be nonnegative with a positive sum");
    }
    if (!(c.rolling.train_fraction > 0 && c.rolling.train_fraction < 1)) {
        errors.push_back("rolling.train_fraction: must lie in (0, 1)");
    }
    if (c.rolling.step == 0) errors.push_back("rolling.step: must be >= 1");
    if (c.rolling.threads == 0) errors.push_back("rolling.threads: must be >= 1");
    if (c.shap_background == 0) errors.push_back("shap.background: must be >= 1");
    if (c.top_k == 0) errors.push_back("shap.top_k: must be >= 1");
    try {
        explain::validate_periods(c.periods);
    } catch (const Error& e) {
        errors.push_back(std::string("periods: ") + e.what());
    }
    return errors;
}

std::string config_snapshot(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["inputs"] = {{"bars", c.bars.string()},
                   {"news", c.news.string()},
                   {"vectors", c.vectors.string()},
                   {"lexicon", c.lexicon.string()},
                   {"cleaning_rules", c.cleaning_rules.string()},
                   {"stopwords", c.stopwords.string()}};
    if (c.provider) {
        j["provider"] = {{"endpoint", c.provider->endpoint},
                         {"model", c.provider->model},
                         {"batch_size", c.provider->batch_size}};
    }
    std::vector<std::string> ch;
    for (auto x : c.channels) ch.emplace_back(features::to_string(x));
    j["channels"] = ch;
    j["lags"] = c.lags;
    j["interval_minutes"] = c.interval_minutes;
    j["ensemble"] = {{"knn_k", c.ensemble.knn_k},
                     {"l2_lambda", c.ensemble.l2_lambda},
                     {"var_floor", c.ensemble.var_floor},
                     {"lr_tol", c.ensemble.lr_tol},
                     {"lr_max_iter", c.ensemble.lr_max_iter},
                     {"weights", c.ensemble.weights}};
    j["rolling"] = {{"train_fraction", c.rolling.train_fraction},
                    {"step", c.rolling.step},
                    {"window_mode", c.rolling.window_mode == eval::WindowMode::sliding ? "sliding" : "expanding"},
                    {"window_rows", c.rolling.window_rows ? nlohmann::ordered_json(*c.rolling.window_rows)
                                                          : nlohmann::ordered_json(nullptr)},
                    {"min_window", c.rolling.min_window}};
    j["shap"] = {{"n_samples", c.shap_samples}, {"background", c.shap_background}, {"top_k", c.top_k}};
    j["periods"] = nlohmann::ordered_json::array();
    for (const auto& p : c.periods) {
        j["periods"].push_back({{"name", p.name}, {"start", format_date(p.start)}, {"end", format_date(p.end)}});
    }
    j["seed"] = c.seed;
    return j.dump(2);
}

}  // namespace oilvol::cli
