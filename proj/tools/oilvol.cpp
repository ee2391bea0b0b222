// oilvol: command-line driver for the volatility-direction pipeline.
//
//   oilvol all --config fixture/config.json
//   oilvol evaluate --config cfg.json --threads 4
//   oilvol synth --dir fixture

#include "oilvol/pipeline.hpp"
#include "oilvol/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

struct Overrides {
    std::string config_path;
    std::string bars, news, vectors, lexicon, cache, stopwords, cleaning_rules, output_dir;
    std::vector<std::string> channels;
    std::optional<std::size_t> lags, knn_k, threads, shap_samples, top_k, window_rows, min_window;
    std::optional<double> train_fraction;
    std::optional<std::string> window_mode;
    std::optional<std::uint64_t> seed;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON config file");
    cmd->add_option("--bars", o.bars, "intraday bars CSV");
    cmd->add_option("--news", o.news, "headlines CSV");
    cmd->add_option("--vectors", o.vectors, "word vectors (word2vec/GloVe text)");
    cmd->add_option("--lexicon", o.lexicon, "sentiment lexicon TSV");
    cmd->add_option("--stopwords", o.stopwords, "extra stopwords, one per line");
    cmd->add_option("--cleaning-rules", o.cleaning_rules, "headline cleaning rules JSON");
    cmd->add_option("--cache", o.cache, "remote embedding cache file (env OILVOL_CACHE)");
    cmd->add_option("-o,--output-dir", o.output_dir, "artifact directory");
    cmd->add_option("--channels", o.channels, "news channels: count sentiment embedding")->delimiter(',');
    cmd->add_option("--lags", o.lags, "lag order p for news channels");
    cmd->add_option("--knn-k", o.knn_k, "neighbours for KNN (odd)");
    cmd->add_option("--train-fraction", o.train_fraction, "rolling window as a fraction of rows");
    cmd->add_option("--window-rows", o.window_rows, "rolling window length in rows");
    cmd->add_option("--min-window", o.min_window, "smallest allowed training window");
    cmd->add_option("--window-mode", o.window_mode, "sliding or expanding")
        ->check(CLI::IsMember({"sliding", "expanding"}));
    cmd->add_option("--threads", o.threads, "worker threads for rolling windows and SHAP");
    cmd->add_option("--shap-samples", o.shap_samples, "KernelSHAP coalition samples");
    cmd->add_option("--top-k", o.top_k, "words per period report");
    cmd->add_option("--seed", o.seed, "global seed");
}

oilvol::cli::RunConfig build_config(const Overrides& o) {
    using namespace oilvol;
    cli::RunConfig c;
    if (!o.config_path.empty()) {
        const std::filesystem::path p(o.config_path);
        if (!std::filesystem::is_regular_file(p)) {
            throw Error(ErrorKind::config, "config file '" + o.config_path + "' does not exist");
        }
        c = cli::config_from_json(read_file(p), c, p.parent_path());
    }
    if (const char* env = std::getenv("OILVOL_CACHE"); env && *env) c.cache = env;
    auto set_path = [](std::filesystem::path& dst, const std::string& v) {
        if (!v.empty()) dst = v;
    };
    set_path(c.bars, o.bars);
    set_path(c.news, o.news);
    set_path(c.vectors, o.vectors);
    set_path(c.lexicon, o.lexicon);
    set_path(c.stopwords, o.stopwords);
    set_path(c.cleaning_rules, o.cleaning_rules);
    set_path(c.cache, o.cache);
    set_path(c.output_dir, o.output_dir);
    if (!o.channels.empty()) {
        c.channels.clear();
        for (const auto& name : o.channels) {
            auto ch = features::channel_from_string(name);
            if (!ch || *ch == features::Channel::har) {
                throw Error(ErrorKind::config, "--channels: unknown news channel '" + name + "'");
            }
            c.channels.push_back(*ch);
        }
    }
    if (o.lags) c.lags = *o.lags;
    if (o.knn_k) c.ensemble.knn_k = *o.knn_k;
    if (o.train_fraction) c.rolling.train_fraction = *o.train_fraction;
    if (o.window_rows) c.rolling.window_rows = *o.window_rows;
    if (o.min_window) c.rolling.min_window = *o.min_window;
    if (o.window_mode) {
        c.rolling.window_mode = *o.window_mode == "expanding" ? eval::WindowMode::expanding : eval::WindowMode::sliding;
    }
    if (o.threads) c.rolling.threads = *o.threads;
    if (o.shap_samples) c.shap_samples = *o.shap_samples;
    if (o.top_k) c.top_k = *o.top_k;
    if (o.seed) c.seed = *o.seed;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crude-oil realized-volatility direction pipeline"};
    app.set_version_flag("--version", std::string(oilvol::cli::kToolVersion));
    app.require_subcommand(1);

    Overrides o;
    std::optional<oilvol::cli::Command> command;
    for (auto c : {oilvol::cli::Command::ingest, oilvol::cli::Command::features, oilvol::cli::Command::evaluate,
                   oilvol::cli::Command::mcnemar, oilvol::cli::Command::explain, oilvol::cli::Command::all}) {
        static const std::map<oilvol::cli::Command, std::string> help = {
            {oilvol::cli::Command::ingest, "bars and headlines -> rv.csv, labels.csv, news_clean.csv"},
            {oilvol::cli::Command::features, "per-channel lagged feature tables"},
            {oilvol::cli::Command::evaluate, "rolling-window ensemble predictions and metrics"},
            {oilvol::cli::Command::mcnemar, "pairwise McNemar tests over prediction logs"},
            {oilvol::cli::Command::explain, "KernelSHAP word report for the embedding channel"},
            {oilvol::cli::Command::all, "every stage in order"}};
        auto* sub = app.add_subcommand(std::string(oilvol::cli::to_string(c)), help.at(c));
        add_run_options(sub, o);
        sub->callback([&command, c] { command = c; });
    }

    std::string synth_dir;
    oilvol::synthetic::FixtureSpec synth_spec;
    auto* synth = app.add_subcommand("synth", "write the synthetic planted-token fixture");
    synth->add_option("-d,--dir", synth_dir, "target directory")->required();
    synth->add_option("--days", synth_spec.trading_days, "trading days");
    synth->add_option("--seed", synth_spec.seed, "generator seed");
    synth->add_option("--min-headlines", synth_spec.min_headlines, "fewest headlines per day");
    synth->add_option("--max-headlines", synth_spec.max_headlines, "most headlines per day");
    synth->add_option("--planted-low", synth_spec.planted_low, "planted vector lower bound");
    synth->add_option("--planted-high", synth_spec.planted_high, "planted vector upper bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            const auto info = oilvol::synthetic::write_fixture(synth_dir, synth_spec);
            std::cout << "wrote fixture to " << synth_dir << " (" << info.trading_days.size() << " days, "
                      << info.headlines << " headlines, planted token on " << info.planted_days << " days)\n";
            return 0;
        }
        const auto config = build_config(o);
        const auto written = oilvol::cli::run(config, *command);
        for (const auto& name : written) std::cout << (config.output_dir / name).string() << "\n";
        return 0;
    } catch (const oilvol::Error& e) {
        std::cerr << "oilvol: error: " << e.what() << "\n";
        return oilvol::cli::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "oilvol: error: " << e.what() << "\n";
        return 3;
    }
}
