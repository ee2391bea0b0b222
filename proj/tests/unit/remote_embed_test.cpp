#include "oilvol/embeddings.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <thread>

using namespace oilvol;
using namespace oilvol::embed;
namespace fs = std::filesystem;

namespace {

/// In-process embedding server: vector k of a text is (len, k, first byte).
class FakeProvider {
public:
    explicit FakeProvider(std::size_t dim = 3) : dim_(dim) {
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            if (fail_with_) {
                res.status = *fail_with_;
                res.set_header("Retry-After", "7");
                return;
            }
            auto body = nlohmann::json::parse(req.body);
            nlohmann::json out;
            out["dimension"] = dim_.load();
            out["vectors"] = nlohmann::json::array();
            for (const auto& t : body["texts"]) {
                const auto s = t.get<std::string>();
                std::vector<double> v(dim_.load());
                for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(s.size()) + 0.25 * k + s[0];
                out["vectors"].push_back(v);
                last_texts_.push_back(s);
            }
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeProvider() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int calls() const { return calls_; }
    void set_dim(std::size_t d) { dim_ = d; }
    void fail_with(int status) { fail_with_ = status; }
    std::vector<std::string> last_texts_;

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> calls_{0};
    std::atomic<std::size_t> dim_;
    std::optional<int> fail_with_;
};

fs::path temp_cache(const std::string& name) {
    auto p = fs::temp_directory_path() / ("oilvol_cache_" + name + "_" + std::to_string(::getpid()) + ".tsv");
    fs::remove(p);
    return p;
}

EmbeddingProvider provider(const std::string& endpoint, const fs::path& cache, std::size_t batch) {
    EmbeddingProvider p;
    p.endpoint = endpoint;
    p.model_name = "toy-model";
    p.batch_size = batch;
    p.cache_path = cache;
    p.timeout_seconds = 2;
    return p;
}

}  // namespace

TEST(Remote, BatchesInInputOrder) {
    FakeProvider server;
    auto cache = temp_cache("batch");
    RemoteStats stats;
    auto out = remote_embed({"alpha", "be", "gamma ray"}, provider(server.endpoint(), cache, 2), &stats);
    EXPECT_EQ(stats.http_calls, 2u);
    EXPECT_EQ(server.calls(), 2);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0][0], 5.0 + 'a');
    EXPECT_EQ(out[1][0], 2.0 + 'b');
    EXPECT_EQ(out[2][1], 9.0 + 0.25 + 'g');
    fs::remove(cache);
}

TEST(Remote, CacheServesWhenProviderOffline) {
    auto cache = temp_cache("offline");
    std::vector<Vector> first;
    {
        FakeProvider server;
        first = remote_embed({"crude rallies", "opec cuts"}, provider(server.endpoint(), cache, 8));
    }
    // Nothing listens here any more.
    RemoteStats stats;
    auto again = remote_embed({"crude rallies", "  opec   cuts "}, provider("http://127.0.0.1:9", cache, 8), &stats);
    EXPECT_EQ(stats.cache_hits, 2u);
    EXPECT_EQ(stats.http_calls, 0u);
    EXPECT_EQ(again, first);
    fs::remove(cache);
}

TEST(Remote, DuplicateTextsFetchedOnce) {
    FakeProvider server;
    auto cache = temp_cache("dupes");
    RemoteStats stats;
    auto out = remote_embed({"same text", "same text", "other"}, provider(server.endpoint(), cache, 10), &stats);
    EXPECT_EQ(server.last_texts_.size(), 2u);
    EXPECT_EQ(out[0], out[1]);
    fs::remove(cache);
}

TEST(Remote, DimensionDriftIsProtocolError) {
    FakeProvider server(768);
    auto cache = temp_cache("drift");
    remote_embed({"first"}, provider(server.endpoint(), cache, 1));
    server.set_dim(512);
    try {
        remote_embed({"first", "second"}, provider(server.endpoint(), cache, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
    }
    fs::remove(cache);
}

TEST(Remote, UnreachableAndHttpErrorsAreProviderErrors) {
    auto cache = temp_cache("errors");
    try {
        remote_embed({"x"}, provider("http://127.0.0.1:9", cache, 1));
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_TRUE(e.retry_after_seconds().has_value());
    }
    FakeProvider server;
    server.fail_with(503);
    try {
        remote_embed({"x"}, provider(server.endpoint(), cache, 1));
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.retry_after_seconds(), 7);
    }
    fs::remove(cache);
}

TEST(Cache, KeyNormalizesWhitespaceAndSeparatesModels) {
    EXPECT_EQ(EmbeddingCache::key("m", " a  b "), EmbeddingCache::key("m", "a b"));
    EXPECT_NE(EmbeddingCache::key("m", "a b"), EmbeddingCache::key("n", "a b"));
    EXPECT_EQ(normalize_text("\t a \n b  "), "a b");
}

TEST(Cache, PersistsAcrossInstances) {
    auto path = temp_cache("persist");
    {
        EmbeddingCache c(path);
        c.append({{"k1", Vector{0.1, 0.2}}, {"k2", Vector{1e-300, -3}}});
    }
    EmbeddingCache c(path);
    EXPECT_EQ(c.size(), 2u);
    EXPECT_EQ(*c.find("k2"), (Vector{1e-300, -3}));
    fs::remove(path);
}
