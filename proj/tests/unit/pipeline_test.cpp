#include "oilvol/pipeline.hpp"
#include "oilvol/synthetic.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>

using namespace oilvol;
using namespace oilvol::cli;
namespace fs = std::filesystem;

namespace {

fs::path g_dir;

RunConfig fixture_config(const fs::path& out) {
    auto c = config_from_json(read_file(g_dir / "config.json"), {}, g_dir);
    c.output_dir = out;
    return c;
}

class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        g_dir = fs::temp_directory_path() / ("oilvol_pipeline_" + std::to_string(::getpid()));
        fs::remove_all(g_dir);
        synthetic::FixtureSpec spec;
        spec.trading_days = 160;
        synthetic::write_fixture(g_dir, spec);
        auto c = fixture_config(g_dir / "out");
        for (auto cmd : {Command::ingest, Command::features, Command::evaluate}) run(c, cmd);
    }
    static void TearDownTestSuite() { fs::remove_all(g_dir); }
};

}  // namespace

TEST(Commands, NamesAndExitCodes) {
    for (auto name : {"ingest", "features", "evaluate", "mcnemar", "explain", "all"}) {
        auto c = command_from_string(name);
        ASSERT_TRUE(c);
        EXPECT_EQ(to_string(*c), name);
    }
    EXPECT_FALSE(command_from_string("train"));
    EXPECT_EQ(exit_code_for(ErrorKind::config), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::dependency), 4);
    EXPECT_EQ(exit_code_for(ErrorKind::parse), 3);
}

TEST(Config, EveryBadFieldIsReported) {
    RunConfig c;
    c.ensemble.knn_k = 4;
    c.rolling.train_fraction = 1.5;
    c.rolling.threads = 0;
    c.ensemble.weights = {1, 1};
    auto errors = validate(c, {.bars = true});
    auto has = [&](const char* key) {
        return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.rfind(key, 0) == 0; });
    };
    EXPECT_TRUE(has("ensemble.knn_k"));
    EXPECT_TRUE(has("rolling.train_fraction"));
    EXPECT_TRUE(has("rolling.threads"));
    EXPECT_TRUE(has("ensemble.weights"));
    EXPECT_TRUE(has("inputs.bars"));

    c.output_dir = fs::temp_directory_path() / "oilvol_bad_config";
    try {
        run(c, Command::ingest);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("ensemble.knn_k"), std::string::npos);
        EXPECT_NE(msg.find("rolling.threads"), std::string::npos);
    }
    EXPECT_THROW(config_from_json(R"({"lags": 3, "bogus": 1})"), Error);
    EXPECT_EQ(config_from_json(R"({"lags": 3})").lags, 3u);
}

TEST_F(Pipeline, MetricsForEveryChannelAndHar) {
    const auto out = g_dir / "out";
    auto table = read_file(out / "metrics_table.csv");
    for (auto m : {"count", "sentiment", "embedding", "har"}) {
        EXPECT_NE(table.find(std::string("\n") + m + ","), std::string::npos) << m;
        EXPECT_TRUE(fs::exists(out / ("predictions_" + std::string(m) + ".csv")));
    }
    auto metrics = nlohmann::json::parse(read_file(out / "metrics.json"));
    EXPECT_EQ(metrics["header"]["seed"], 42);
    EXPECT_EQ(metrics["header"]["assumed_hyperparameters"]["knn_k"], 5);
    EXPECT_EQ(metrics["models"].size(), 4u);
    EXPECT_EQ(model_names(fixture_config(out)), (std::vector<std::string>{"count", "sentiment", "embedding", "har"}));

    // Every model is evaluated on the same dates.
    auto ds = load_datasets(fixture_config(out));
    ASSERT_EQ(ds.size(), 4u);
    for (const auto& [name, d] : ds) EXPECT_EQ(d.dates, ds.at("har").dates) << name;
}

TEST_F(Pipeline, ManifestRecordsInputsAndOutputs) {
    const auto out = g_dir / "out";
    auto m = nlohmann::json::parse(read_file(out / "manifest.json"));
    EXPECT_EQ(m["seed"], 42);
    for (auto role : {"bars", "news", "vectors", "lexicon"}) EXPECT_TRUE(m["inputs"].contains(role)) << role;
    ASSERT_TRUE(m["outputs"].contains("metrics.json"));
    for (auto& [name, entry] : m["outputs"].items()) {
        EXPECT_EQ(entry["sha256"], sha256_hex(read_file(out / name))) << name;
    }
    EXPECT_EQ(m["outputs"]["rv.csv"]["stage"], "ingest");
    EXPECT_EQ(m["outputs"]["metrics.json"]["stage"], "evaluate");
}

TEST_F(Pipeline, McNemarWithoutEvaluateIsDependencyError) {
    const auto out = g_dir / "partial";
    auto c = fixture_config(out);
    run(c, Command::ingest);
    try {
        run(c, Command::mcnemar);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::dependency);
        EXPECT_NE(std::string(e.what()).find("evaluate"), std::string::npos);
    }

    const char* cli = std::getenv("OILVOL_CLI");
    if (!cli) GTEST_SKIP() << "OILVOL_CLI not set";
    const std::string cmd = std::string(cli) + " mcnemar -c " + (g_dir / "config.json").string() + " -o " +
                            out.string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 4);
}

TEST_F(Pipeline, McNemarAfterEvaluate) {
    const auto out = g_dir / "out";
    run(fixture_config(out), Command::mcnemar);
    auto j = nlohmann::json::parse(read_file(out / "mcnemar.json"));
    // Four models give six pairs.
    EXPECT_EQ(j["tests"].size(), 6u);
    EXPECT_TRUE(fs::exists(out / "mcnemar_table.csv"));
}

TEST_F(Pipeline, LockedOutputDirectoryIsRejected) {
    const auto out = g_dir / "locked";
    fs::create_directories(out);
    const int fd = ::open((out / ".oilvol.lock").c_str(), O_RDWR | O_CREAT, 0644);
    ASSERT_GE(fd, 0);
    ASSERT_EQ(::flock(fd, LOCK_EX | LOCK_NB), 0);
    try {
        run(fixture_config(out), Command::ingest);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
    EXPECT_NO_THROW(run(fixture_config(out), Command::ingest));
}

TEST_F(Pipeline, RerunIsByteIdentical) {
    const auto a = g_dir / "out", b = g_dir / "again";
    auto c = fixture_config(b);
    c.rolling.threads = 3;
    for (auto cmd : {Command::ingest, Command::features, Command::evaluate}) run(c, cmd);
    for (auto name : {"rv.csv", "features_embedding.csv", "predictions_embedding.csv", "metrics_table.csv"}) {
        EXPECT_EQ(read_file(a / name), read_file(b / name)) << name;
    }
}

TEST_F(Pipeline, ExplainNeedsEmbeddingChannel) {
    auto c = fixture_config(g_dir / "out");
    c.channels = {features::Channel::count};
    try {
        run(c, Command::explain);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}
