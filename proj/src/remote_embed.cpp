#include "oilvol/embeddings.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

namespace oilvol::embed {

namespace {

// RAII flock on a file descriptor.
class FileLock {
public:
    FileLock(const std::filesystem::path& path, int operation) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
        if (fd_ < 0) throw Error(ErrorKind::io, "cannot open cache " + path.string());
        if (::flock(fd_, operation) != 0) {
            ::close(fd_);
            throw Error(ErrorKind::io, "cannot lock cache " + path.string());
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;
    int fd() const { return fd_; }

private:
    int fd_ = -1;
};

struct SplitEndpoint {
    std::string host;       // scheme://host[:port]
    std::string base_path;  // without trailing '/'
};

SplitEndpoint split_endpoint(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw Error(ErrorKind::config, "provider endpoint needs a scheme: " + endpoint);
    auto slash = endpoint.find('/', scheme + 3);
    SplitEndpoint out;
    out.host = endpoint.substr(0, slash);
    out.base_path = slash == std::string::npos ? "" : endpoint.substr(slash);
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
    return out;
}

constexpr int kTransportRetrySeconds = 5;

std::optional<int> retry_after(const httplib::Result& res) {
    if (!res) return std::nullopt;
    if (!res->has_header("Retry-After")) return std::nullopt;
    auto v = parse_double(res->get_header_value("Retry-After"));
    if (!v) return std::nullopt;
    return static_cast<int>(*v);
}

}  // namespace

std::string normalize_text(std::string_view text) {
    std::string out;
    for (const auto& w : split_whitespace(text)) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    FileLock lock(path_, LOCK_SH);
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        // A torn final record from an interrupted run is skipped.
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) continue;
        auto dim = parse_double(line.substr(t1 + 1, t2 - t1 - 1));
        if (!dim) continue;
        Vector v;
        bool ok = true;
        for (const auto& f : split_whitespace(std::string_view(line).substr(t2 + 1))) {
            auto x = parse_double(f);
            if (!x) {
                ok = false;
                break;
            }
            v.push_back(*x);
        }
        if (!ok || v.size() != static_cast<std::size_t>(*dim)) continue;
        entries_.emplace(line.substr(0, t1), std::move(v));
    }
}

std::string EmbeddingCache::key(std::string_view model_name, std::string_view text) {
    std::string payload(model_name);
    payload.push_back('\n');
    payload += normalize_text(text);
    return sha256_hex(payload);
}

const Vector* EmbeddingCache::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingCache::append(const std::vector<std::pair<std::string, Vector>>& records) {
    if (records.empty()) return;
    std::string buf;
    for (const auto& [k, v] : records) {
        buf += k + "\t" + std::to_string(v.size()) + "\t";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) buf.push_back(' ');
            buf += format_double(v[i]);
        }
        buf.push_back('\n');
    }
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    FileLock lock(path_, LOCK_EX);
    std::size_t written = 0;
    while (written < buf.size()) {
        auto n = ::write(lock.fd(), buf.data() + written, buf.size() - written);
        if (n <= 0) throw Error(ErrorKind::io, "short write to cache " + path_.string());
        written += static_cast<std::size_t>(n);
    }
    ::fsync(lock.fd());
    for (const auto& [k, v] : records) entries_.emplace(k, v);
}

std::vector<Vector> remote_embed(const std::vector<std::string>& texts, const EmbeddingProvider& provider,
                                 RemoteStats* stats) {
    if (provider.batch_size == 0) throw Error(ErrorKind::config, "provider batch_size must be >= 1");
    EmbeddingCache cache(provider.cache_path);
    RemoteStats local;

    std::vector<std::string> keys;
    keys.reserve(texts.size());
    std::vector<std::size_t> missing;
    std::optional<std::size_t> dimension;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        keys.push_back(EmbeddingCache::key(provider.model_name, texts[i]));
        if (const Vector* v = cache.find(keys.back())) {
            ++local.cache_hits;
            if (dimension && *dimension != v->size()) {
                throw Error(ErrorKind::protocol, "cached vectors for model '" + provider.model_name +
                                                     "' disagree on dimension");
            }
            dimension = v->size();
        } else {
            missing.push_back(i);
        }
    }

    // Identical texts inside one request are fetched once.
    std::vector<std::size_t> unique_missing;
    {
        std::unordered_map<std::string, bool> seen;
        for (auto i : missing) {
            if (seen.emplace(keys[i], true).second) unique_missing.push_back(i);
        }
    }

    if (!unique_missing.empty()) {
        auto ep = split_endpoint(provider.endpoint);
        httplib::Client client(ep.host);
        client.set_connection_timeout(provider.timeout_seconds);
        client.set_read_timeout(provider.timeout_seconds);
        const std::string path = ep.base_path + "/embed";

        for (std::size_t start = 0; start < unique_missing.size(); start += provider.batch_size) {
            const std::size_t end = std::min(start + provider.batch_size, unique_missing.size());
            nlohmann::json body;
            body["model"] = provider.model_name;
            body["texts"] = nlohmann::json::array();
            for (std::size_t k = start; k < end; ++k) body["texts"].push_back(normalize_text(texts[unique_missing[k]]));

            auto res = client.Post(path, body.dump(), "application/json");
            ++local.http_calls;
            if (!res) {
                throw ProviderError("embedding provider unreachable at " + provider.endpoint + ": " +
                                        httplib::to_string(res.error()),
                                    kTransportRetrySeconds);
            }
            if (res->status != 200) {
                throw ProviderError("embedding provider returned HTTP " + std::to_string(res->status), retry_after(res));
            }

            nlohmann::json reply;
            try {
                reply = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::protocol, std::string("provider response is not JSON: ") + e.what());
            }
            if (!reply.contains("dimension") || !reply["dimension"].is_number_integer() || !reply.contains("vectors") ||
                !reply["vectors"].is_array()) {
                throw Error(ErrorKind::protocol, "provider response lacks 'dimension' or 'vectors'");
            }
            const auto dim = reply["dimension"].get<long long>();
            if (dim <= 0) throw Error(ErrorKind::protocol, "provider declared non-positive dimension");
            if (dimension && *dimension != static_cast<std::size_t>(dim)) {
                throw Error(ErrorKind::protocol, "provider dimension changed from " + std::to_string(*dimension) +
                                                     " to " + std::to_string(dim));
            }
            dimension = static_cast<std::size_t>(dim);
            if (reply["vectors"].size() != end - start) {
                throw Error(ErrorKind::protocol, "provider returned " + std::to_string(reply["vectors"].size()) +
                                                     " vectors for " + std::to_string(end - start) + " texts");
            }
            std::vector<std::pair<std::string, Vector>> records;
            for (std::size_t k = start; k < end; ++k) {
                const auto& jv = reply["vectors"][k - start];
                Vector v;
                try {
                    v = jv.get<Vector>();
                } catch (const nlohmann::json::exception&) {
                    throw Error(ErrorKind::protocol, "provider vector is not a list of numbers");
                }
                if (v.size() != *dimension) throw Error(ErrorKind::protocol, "provider vector length != dimension");
                records.emplace_back(keys[unique_missing[k]], std::move(v));
            }
            cache.append(records);
        }
    }

    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& k : keys) out.push_back(*cache.find(k));
    if (stats) *stats = local;
    return out;
}

}  // namespace oilvol::embed
