#pragma once

// Scorer client: pluggable backends, the append-only score cache, and
// battery scoring with batching, retries and concurrent dispatch.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "entailfair/corpus.hpp"
#include "entailfair/error.hpp"
#include "entailfair/protocol.hpp"
#include "entailfair/scoring.hpp"

namespace entailfair {

enum class Transport { wire, cache };

struct ScorerEndpoint {
    ScoreMode mode = ScoreMode::entailment;
    Transport transport = Transport::cache;
    std::string address;                 // wire: base URL, e.g. http://127.0.0.1:8080
    std::filesystem::path cache_path;    // score cache (read in both transports, appended in wire)
    std::size_t batch_size = 32;
    SimilarityMeasure measure = SimilarityMeasure::cosine;
    std::string fingerprint;             // pins the backend identity; empty = ask backend / infer from cache
    std::size_t concurrency = 1;
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{200};
    std::string auth_token;
};

// Cache/record key for the mode; similarity keys include the measure since
// cosine and dot scores are not interchangeable.
inline std::string mode_key(ScoreMode mode, SimilarityMeasure measure) {
    if (mode == ScoreMode::similarity) return "similarity:" + std::string(to_string(measure));
    return std::string(to_string(mode));
}

inline std::string mode_key(const ScorerEndpoint& ep) { return mode_key(ep.mode, ep.measure); }

// ---------------------------------------------------------------------------
// Backends

class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;
    virtual std::string fingerprint() = 0;
    // One round-trip per batch. Throws TransportError on delivery failure.
    virtual WireResponse score(const WireRequest& request, const std::string& request_id) = 0;
};

// In-process backend around a callable; used for mocks and local scorers.
class CallbackBackend final : public ScorerBackend {
public:
    using Fn = std::function<WireResponse(const WireRequest&)>;

    CallbackBackend(std::string fingerprint, Fn fn) : fingerprint_(std::move(fingerprint)), fn_(std::move(fn)) {}

    std::string fingerprint() override { return fingerprint_; }

    WireResponse score(const WireRequest& request, const std::string&) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        WireResponse r = fn_(request);
        if (r.fingerprint.empty()) r.fingerprint = fingerprint_;
        return r;
    }

    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::string fingerprint_;
    Fn fn_;
    std::atomic<std::size_t> calls_{0};
};

class HttpBackend final : public ScorerBackend {
public:
    explicit HttpBackend(std::string address, std::string auth_token = {},
                         std::chrono::seconds timeout = std::chrono::seconds(120))
        : auth_token_(std::move(auth_token)), timeout_(timeout) {
        const auto scheme = address.find("://");
        const auto path_at = address.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        if (path_at == std::string::npos) {
            host_ = address;
        } else {
            host_ = address.substr(0, path_at);
            prefix_ = address.substr(path_at);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
        if (host_.empty()) throw ValidationError("empty scorer endpoint address");
    }

    std::string fingerprint() override {
        auto res = client().Get(prefix_ + "/fingerprint", headers());
        check(res, "fingerprint");
        try {
            return nlohmann::json::parse(res->body).at("fingerprint").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ContractError(std::string("malformed fingerprint response: ") + e.what());
        }
    }

    bool healthy() {
        auto res = client().Get(prefix_ + "/health", headers());
        return res && res->status == 200;
    }

    WireResponse score(const WireRequest& request, const std::string& request_id) override {
        auto res = client().Post(prefix_ + "/score", headers(), to_json(request).dump(), "application/json");
        check(res, request_id);
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ContractError("request " + request_id + ": response is not JSON: " + e.what());
        }
        return response_from_json(body);
    }

private:
    httplib::Client client() const {
        httplib::Client c(host_);
        c.set_connection_timeout(timeout_);
        c.set_read_timeout(timeout_);
        c.set_write_timeout(timeout_);
        return c;
    }

    httplib::Headers headers() const {
        httplib::Headers h;
        if (!auth_token_.empty()) h.emplace("Authorization", "Bearer " + auth_token_);
        return h;
    }

    static void check(const httplib::Result& res, const std::string& request_id) {
        if (!res) throw TransportError(request_id, "connection failed: " + httplib::to_string(res.error()));
        if (res->status == 200) return;
        const bool retryable = res->status == 503 || res->status == 429 || res->status >= 500;
        if (!retryable && res->status >= 400 && res->status < 500)
            throw ContractError("request " + request_id + ": backend rejected request with HTTP " +
                                std::to_string(res->status) + ": " + res->body);
        throw TransportError(request_id, "HTTP " + std::to_string(res->status), retryable);
    }

    std::string host_;
    std::string prefix_;
    std::string auth_token_;
    std::chrono::seconds timeout_;
};

// ---------------------------------------------------------------------------
// Score cache: JSON Lines, one record per scored item, keyed by
// (battery, id, mode, fingerprint). Append-only; the first record for a key
// wins on load.

struct CacheKey {
    std::string battery;
    std::string id;
    std::string mode;
    std::string fingerprint;

    std::string flat() const { return battery + '\x1f' + id + '\x1f' + mode + '\x1f' + fingerprint; }
};

class ScoreCache {
public:
    ScoreCache() = default;

    explicit ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
        if (path_.empty() || !std::filesystem::exists(path_)) return;
        std::ifstream in(path_);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                CacheKey key{j.at("battery"), j.at("id"), j.at("mode"), j.at("fingerprint")};
                insert(key, score_from_json(j));
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("score cache " + path_.string() + " line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    ScoreCache(const ScoreCache&) = delete;
    ScoreCache& operator=(const ScoreCache&) = delete;

    std::optional<WireScore> lookup(const CacheKey& key) const {
        std::lock_guard lock(mu_);
        const auto it = entries_.find(key.flat());
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    // Fingerprints present for a (battery, mode).
    std::set<std::string> fingerprints(const std::string& battery, const std::string& mode) const {
        std::lock_guard lock(mu_);
        std::set<std::string> out;
        for (const auto& [b, m, fp] : index_)
            if (b == battery && m == mode) out.insert(fp);
        return out;
    }

    // Serialized appends; each record is flushed before returning.
    void append(const CacheKey& key, const WireScore& score) {
        std::lock_guard lock(mu_);
        if (entries_.count(key.flat())) return;
        entries_.emplace(key.flat(), score);
        index_.insert({key.battery, key.mode, key.fingerprint});
        if (path_.empty()) return;
        if (!out_.is_open()) {
            if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
            out_.open(path_, std::ios::app | std::ios::binary);
            if (!out_) throw ValidationError("cannot open score cache for append: " + path_.string());
        }
        nlohmann::json rec = to_json(score);
        rec["battery"] = key.battery;
        rec["mode"] = key.mode;
        rec["fingerprint"] = key.fingerprint;
        out_ << rec.dump() << '\n';
        out_.flush();
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return entries_.size();
    }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void insert(const CacheKey& key, WireScore score) {
        if (entries_.emplace(key.flat(), std::move(score)).second)
            index_.insert({key.battery, key.mode, key.fingerprint});
    }

    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, WireScore> entries_;
    std::set<std::tuple<std::string, std::string, std::string>> index_;
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Battery scoring

struct ScoreStats {
    std::string fingerprint;
    std::size_t cache_hits = 0;
    std::size_t wire_items = 0;
    std::size_t wire_calls = 0;
};

struct ScoreResult {
    std::map<std::string, PairScore> scores;
    ScoreStats stats;
};

struct EmbeddingResult {
    std::map<std::string, std::vector<double>> vectors;
    ScoreStats stats;
};

namespace detail {

inline WireItem wire_item(const PromptPair& p, ScoreMode mode) {
    WireItem item{p.id, p.premise, p.hypothesis, {}};
    if (mode == ScoreMode::entailment) {
        item.text = p.text.empty() ? make_supposition(p.premise, p.hypothesis).text : p.text;
    } else if (mode == ScoreMode::embedding) {
        item.text = p.text.empty() ? p.premise : p.text;
    }
    return item;
}

inline void check_payload(const WireScore& s, ScoreMode mode) {
    if (s.error) throw ContractError("backend returned an error for item " + s.id + ": " + *s.error);
    switch (mode) {
        case ScoreMode::similarity:
            if (!s.similarity) throw ContractError("item " + s.id + ": similarity missing from response");
            PairScore::similarity(*s.similarity);
            break;
        case ScoreMode::entailment:
            if (!s.probs) throw ContractError("item " + s.id + ": entailment probabilities missing from response");
            try {
                PairScore::entailment(*s.probs);
            } catch (const ContractError& e) {
                throw ContractError("item " + s.id + ": " + e.what());
            }
            break;
        case ScoreMode::embedding:
            if (!s.embedding || s.embedding->empty())
                throw ContractError("item " + s.id + ": embedding missing from response");
            break;
    }
}

inline std::string resolve_fingerprint(const ScorerEndpoint& ep, const PromptBattery& battery,
                                       const ScoreCache& cache, ScorerBackend* backend) {
    if (!ep.fingerprint.empty()) return ep.fingerprint;
    if (ep.transport == Transport::wire) {
        if (!backend) throw ValidationError("wire transport requires a backend");
        return backend->fingerprint();
    }
    const auto fps = cache.fingerprints(battery.cache_id(), mode_key(ep));
    if (fps.empty()) {
        std::vector<std::string> ids;
        for (const auto& p : battery.pairs) ids.push_back(p.id);
        throw MissingScoresError(std::move(ids));
    }
    if (fps.size() > 1)
        throw ValidationError("score cache holds " + std::to_string(fps.size()) + " backend fingerprints for battery " +
                              battery.name + "; pin one explicitly");
    return *fps.begin();
}

// Every id of the battery mapped to its validated wire record.
inline std::map<std::string, WireScore> resolve(const ScorerEndpoint& ep, const PromptBattery& battery,
                                                ScoreCache& cache, ScorerBackend* backend, ScoreStats& stats) {
    if (ep.batch_size == 0) throw ValidationError("batch_size must be positive");
    const std::string battery_id = battery.cache_id();
    const std::string mode = mode_key(ep);
    stats.fingerprint = resolve_fingerprint(ep, battery, cache, backend);

    std::map<std::string, WireScore> out;
    std::vector<const PromptPair*> missing;
    for (const auto& p : battery.pairs) {
        if (out.count(p.id)) throw ValidationError("battery " + battery.name + " has duplicate id " + p.id);
        if (auto hit = cache.lookup({battery_id, p.id, mode, stats.fingerprint})) {
            check_payload(*hit, ep.mode);
            out.emplace(p.id, std::move(*hit));
            ++stats.cache_hits;
        } else {
            missing.push_back(&p);
            out.emplace(p.id, WireScore{});  // reserve; filled below
        }
    }
    if (missing.empty()) return out;

    if (ep.transport == Transport::cache) {
        std::vector<std::string> ids;
        for (const auto* p : missing) ids.push_back(p->id);
        throw MissingScoresError(std::move(ids));
    }
    if (!backend) throw ValidationError("wire transport requires a backend");

    const std::size_t n_batches = (missing.size() + ep.batch_size - 1) / ep.batch_size;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> calls{0};
    std::mutex mu;
    std::exception_ptr failure;

    auto run_batch = [&](std::size_t b) {
        WireRequest req;
        req.mode = ep.mode;
        req.measure = ep.measure;
        const std::size_t lo = b * ep.batch_size;
        const std::size_t hi = std::min(missing.size(), lo + ep.batch_size);
        for (std::size_t i = lo; i < hi; ++i) req.pairs.push_back(wire_item(*missing[i], ep.mode));
        const std::string request_id = battery_id + "#" + std::to_string(b);

        WireResponse resp;
        for (int attempt = 0;; ++attempt) {
            try {
                calls.fetch_add(1, std::memory_order_relaxed);
                resp = backend->score(req, request_id);
                break;
            } catch (const TransportError& e) {
                if (!e.retryable() || attempt >= ep.max_retries) throw;
                std::this_thread::sleep_for(ep.retry_backoff * (1 << attempt));
            }
        }
        if (!resp.fingerprint.empty() && resp.fingerprint != stats.fingerprint)
            throw ContractError("request " + request_id + ": backend fingerprint " + resp.fingerprint +
                                " does not match " + stats.fingerprint);

        std::set<std::string> want;
        for (const auto& item : req.pairs) want.insert(item.id);
        std::set<std::string> got;
        for (const auto& s : resp.scores) {
            if (!want.count(s.id)) throw ContractError("request " + request_id + ": unexpected id " + s.id);
            if (!got.insert(s.id).second) throw ContractError("request " + request_id + ": duplicate id " + s.id);
            check_payload(s, ep.mode);
        }
        if (got.size() != want.size())
            throw ContractError("request " + request_id + ": response covers " + std::to_string(got.size()) + " of " +
                                std::to_string(want.size()) + " items");
        for (auto& s : resp.scores) {
            cache.append({battery_id, s.id, mode, stats.fingerprint}, s);
            std::lock_guard lock(mu);
            out[s.id] = std::move(s);
        }
    };

    auto worker = [&] {
        for (std::size_t b = next.fetch_add(1); b < n_batches; b = next.fetch_add(1)) {
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                run_batch(b);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(ep.concurrency, n_batches));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    stats.wire_calls = calls.load();
    stats.wire_items = missing.size();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace detail

inline ScoreResult score_battery(const ScorerEndpoint& ep, const PromptBattery& battery, ScoreCache& cache,
                                 ScorerBackend* backend = nullptr) {
    if (ep.mode == ScoreMode::embedding) throw ValidationError("score_battery: use fetch_embeddings for embedding mode");
    ScoreResult result;
    auto raw = detail::resolve(ep, battery, cache, backend, result.stats);
    for (auto& [id, s] : raw)
        result.scores.emplace(id, ep.mode == ScoreMode::similarity ? PairScore::similarity(*s.similarity)
                                                                   : PairScore::entailment(*s.probs));
    return result;
}

inline EmbeddingResult fetch_embeddings(const ScorerEndpoint& ep, const PromptBattery& battery, ScoreCache& cache,
                                        ScorerBackend* backend = nullptr) {
    if (ep.mode != ScoreMode::embedding) throw ValidationError("fetch_embeddings requires embedding mode");
    EmbeddingResult result;
    auto raw = detail::resolve(ep, battery, cache, backend, result.stats);
    for (auto& [id, s] : raw) result.vectors.emplace(id, std::move(*s.embedding));
    return result;
}

}  // namespace entailfair
