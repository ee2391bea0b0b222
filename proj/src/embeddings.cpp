#include "oilvol/embeddings.hpp"

#include <charconv>
#include <sstream>

namespace oilvol::embed {

VectorStore::VectorStore(std::size_t dimension, std::string source_name)
    : dimension_(dimension), source_name_(std::move(source_name)) {
    if (dimension_ == 0) throw Error(ErrorKind::format, "vector dimension must be positive");
}

bool VectorStore::insert(std::string token, Vector v) {
    if (v.size() != dimension_) {
        throw Error(ErrorKind::format, "vector for '" + token + "' has length " + std::to_string(v.size()) +
                                           ", expected " + std::to_string(dimension_));
    }
    if (vectors_.count(token)) return false;
    folded_.emplace(to_lower(token), token);
    vectors_.emplace(std::move(token), std::move(v));
    return true;
}

const Vector* VectorStore::lookup(const std::string& token) const {
    if (auto it = vectors_.find(token); it != vectors_.end()) return &it->second;
    if (auto it = folded_.find(to_lower(token)); it != folded_.end()) return &vectors_.at(it->second);
    return nullptr;
}

namespace {

bool is_count(const std::string& s) {
    if (s.empty()) return false;
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

VectorStore load_vectors(std::string_view text, std::string source_name) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<std::size_t> dim;
    std::optional<VectorStore> store;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_whitespace(line);
        if (fields.empty()) continue;
        if (first) {
            first = false;
            if (fields.size() == 2 && is_count(fields[0]) && is_count(fields[1])) {
                dim = std::stoul(fields[1]);
                if (*dim == 0) throw Error(ErrorKind::format, "header declares dimension 0");
                continue;
            }
        }
        if (fields.size() < 2) throw Error(ErrorKind::format, "line " + std::to_string(line_no) + ": token with no values");
        const std::string& token = fields[0];
        const std::size_t n = fields.size() - 1;
        if (!dim) dim = n;
        if (n != *dim) {
            throw Error(ErrorKind::format, "vector for token '" + token + "' has " + std::to_string(n) +
                                               " values, expected " + std::to_string(*dim));
        }
        Vector v(n);
        for (std::size_t k = 0; k < n; ++k) {
            auto val = parse_double(fields[k + 1]);
            if (!val) throw Error(ErrorKind::format, "non-numeric value in vector for token '" + token + "'");
            v[k] = *val;
        }
        if (!store) store.emplace(*dim, source_name);
        store->insert(token, std::move(v));
    }
    if (!store) throw Error(ErrorKind::format, "vector file '" + source_name + "' contains no vectors");
    return std::move(*store);
}

HeadlineVector embed_headline(const std::vector<std::string>& tokens, const VectorStore& store) {
    Vector sum(store.dimension(), 0.0);
    std::size_t hits = 0;
    for (const auto& tok : tokens) {
        const Vector* v = store.lookup(tok);
        if (!v) continue;
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += (*v)[d];
        ++hits;
    }
    if (hits == 0) return NoCoverage{};
    for (auto& x : sum) x /= static_cast<double>(hits);
    return sum;
}

PoolResult pool_daily(const news::DailyNews& day, const std::vector<HeadlineVector>& headline_vectors) {
    if (headline_vectors.size() != day.headlines.size()) {
        throw Error(ErrorKind::contract, "pool_daily: one headline vector per headline required");
    }
    DailyEmbedding out;
    out.day = day.day;
    for (std::size_t i = 0; i < headline_vectors.size(); ++i) {
        if (const auto* v = std::get_if<Vector>(&headline_vectors[i])) {
            if (!out.article_vectors.empty() && v->size() != out.article_vectors.front().size()) {
                throw Error(ErrorKind::contract, "pool_daily: inconsistent vector dimensions");
            }
            out.article_vectors.push_back(*v);
            out.headline_index.push_back(i);
        }
    }
    if (out.article_vectors.empty()) return MissingDay{day.day};
    out.vector.assign(out.article_vectors.front().size(), 0.0);
    for (const auto& v : out.article_vectors) {
        for (std::size_t d = 0; d < v.size(); ++d) out.vector[d] += v[d];
    }
    const double n = static_cast<double>(out.article_vectors.size());
    for (auto& x : out.vector) x /= n;
    return out;
}

std::vector<PoolResult> embed_days(const std::vector<news::DailyNews>& days, const VectorStore& store) {
    std::vector<PoolResult> out;
    out.reserve(days.size());
    for (const auto& day : days) {
        std::vector<HeadlineVector> hv;
        hv.reserve(day.headlines.size());
        for (const auto& h : day.headlines) hv.push_back(embed_headline(h.tokens, store));
        out.push_back(pool_daily(day, hv));
    }
    return out;
}

}  // namespace oilvol::embed
