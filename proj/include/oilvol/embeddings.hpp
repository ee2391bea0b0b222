#pragma once

#include "oilvol/common.hpp"
#include "oilvol/news_pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace oilvol::embed {

using Vector = std::vector<double>;

/// Static word vectors loaded from a word2vec-text or GloVe-text file.
class VectorStore {
public:
    VectorStore(std::size_t dimension, std::string source_name);

    /// Returns false (and keeps the existing vector) when `token` is already present.
    bool insert(std::string token, Vector v);

    /// Exact lookup, then a case-folded lookup so lowercase tokens still hit
    /// mixed-case vocabulary entries.
    const Vector* lookup(const std::string& token) const;

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return vectors_.size(); }
    const std::string& source_name() const noexcept { return source_name_; }

private:
    std::size_t dimension_;
    std::string source_name_;
    std::unordered_map<std::string, Vector> vectors_;
    std::unordered_map<std::string, std::string> folded_;  // lowercase -> first stored key
};

/// Accepts an optional `count dim` header line. Throws Error{format} on an
/// empty file or a row whose length disagrees with the dimension.
VectorStore load_vectors(std::string_view text, std::string source_name = "vectors");

struct NoCoverage {};
using HeadlineVector = std::variant<Vector, NoCoverage>;

/// Mean of in-vocabulary token vectors.
HeadlineVector embed_headline(const std::vector<std::string>& tokens, const VectorStore& store);

struct DailyEmbedding {
    Date day;
    Vector vector;
    std::vector<Vector> article_vectors;
    /// Index into DailyNews::headlines for each article vector; headlines
    /// without coverage have no entry.
    std::vector<std::size_t> headline_index;
};

struct MissingDay {
    Date day;
};
using PoolResult = std::variant<DailyEmbedding, MissingDay>;

/// Mean pooling of the covered headline vectors; `headline_vectors` is parallel
/// to `day.headlines`.
PoolResult pool_daily(const news::DailyNews& day, const std::vector<HeadlineVector>& headline_vectors);

/// embed_headline + pool_daily over every day.
std::vector<PoolResult> embed_days(const std::vector<news::DailyNews>& days, const VectorStore& store);

// ---------------------------------------------------------------------------
// Remote provider
// ---------------------------------------------------------------------------

struct EmbeddingProvider {
    std::string endpoint;  // e.g. http://localhost:8080 ; requests go to <endpoint>/embed
    std::string model_name;
    std::size_t batch_size = 32;
    std::filesystem::path cache_path;
    int timeout_seconds = 30;
};

/// Append-only `hash<TAB>dimension<TAB>floats` record file keyed by
/// SHA-256(model_name, normalized text).
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path path);

    static std::string key(std::string_view model_name, std::string_view text);

    const Vector* find(const std::string& key) const;
    /// Appends under an exclusive file lock and flushes before returning.
    void append(const std::vector<std::pair<std::string, Vector>>& records);
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::filesystem::path path_;
    std::unordered_map<std::string, Vector> entries_;
};

/// Trims and collapses internal whitespace.
std::string normalize_text(std::string_view text);

struct RemoteStats {
    std::size_t cache_hits = 0;
    std::size_t http_calls = 0;
};

/// One vector per text in input order. Cache hits are never re-fetched and
/// fetched vectors are persisted before return. Throws ProviderError on
/// transport failure or non-200 status and Error{protocol} on malformed
/// responses or dimension drift.
std::vector<Vector> remote_embed(const std::vector<std::string>& texts, const EmbeddingProvider& provider,
                                 RemoteStats* stats = nullptr);

}  // namespace oilvol::embed
