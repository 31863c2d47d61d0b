#pragma once

// Deterministic in-process scorer and an HTTP server speaking the scorer
// protocol, for tests that need a backend.

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "entailfair/client.hpp"
#include "entailfair/util.hpp"

namespace mock {

using namespace entailfair;

// Scores are a pure function of the item's text, so any backend built on
// this function is deterministic.
inline WireScore hashed_score(const WireItem& item, ScoreMode mode, std::size_t dim = 8) {
    SplitMix64 rng(Fnv1a{}.field(item.premise).field(item.hypothesis).field(item.text).digest());
    WireScore s;
    s.id = item.id;
    switch (mode) {
        case ScoreMode::similarity: s.similarity = 2.0 * rng.uniform() - 1.0; break;
        case ScoreMode::entailment: {
            const double a = rng.uniform() + 1e-3, b = rng.uniform() + 1e-3, c = rng.uniform() + 1e-3;
            const double z = a + b + c;
            s.probs = Probabilities{a / z, b / z, c / z};
            break;
        }
        case ScoreMode::embedding: {
            std::vector<double> v(dim);
            for (auto& x : v) x = rng.normal();
            s.embedding = std::move(v);
            break;
        }
    }
    return s;
}

inline WireResponse hashed_response(const WireRequest& req, const std::string& fingerprint) {
    WireResponse r;
    r.fingerprint = fingerprint;
    for (const auto& item : req.pairs) r.scores.push_back(hashed_score(item, req.mode));
    return r;
}

inline std::shared_ptr<CallbackBackend> hashed_backend(std::string fingerprint = "mock-v1") {
    return std::make_shared<CallbackBackend>(fingerprint, [fingerprint](const WireRequest& req) {
        return hashed_response(req, fingerprint);
    });
}

// Protocol server on an ephemeral localhost port. `handler` may be replaced
// to inject failures; it returns the HTTP status and body.
class Server {
public:
    using Handler = std::function<std::pair<int, std::string>(const nlohmann::json& body)>;

    explicit Server(std::string fingerprint = "mock-http-v1", std::string token = {})
        : fingerprint_(std::move(fingerprint)), token_(std::move(token)) {
        handler_ = [this](const nlohmann::json& body) {
            const auto req = request_from_json(body);
            return std::pair<int, std::string>{200, to_json(hashed_response(req, fingerprint_)).dump()};
        };
        srv_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
        srv_.Get("/fingerprint", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            res.set_content(nlohmann::json{{"fingerprint", fingerprint_}}.dump(), "application/json");
        });
        srv_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            ++score_calls;
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (...) {
                res.status = 400;
                res.set_content(R"({"error":"malformed"})", "application/json");
                return;
            }
            Handler h;
            {
                std::lock_guard lock(mu_);
                h = handler_;
            }
            std::pair<int, std::string> out;
            try {
                out = h(body);
            } catch (const std::exception& e) {
                out = {400, nlohmann::json{{"error", e.what()}}.dump()};
            }
            res.status = out.first;
            res.set_content(out.second, "application/json");
        });
        port_ = srv_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { srv_.listen_after_bind(); });
        srv_.wait_until_ready();
    }

    ~Server() {
        srv_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string address() const { return "http://127.0.0.1:" + std::to_string(port_); }

    void set_handler(Handler h) {
        std::lock_guard lock(mu_);
        handler_ = std::move(h);
    }

    const std::string& fingerprint() const { return fingerprint_; }

    std::atomic<int> score_calls{0};

private:
    bool authorized(const httplib::Request& req, httplib::Response& res) {
        if (token_.empty()) return true;
        if (req.get_header_value("Authorization") == "Bearer " + token_) return true;
        res.status = 401;
        res.set_content(R"({"error":"unauthorized"})", "application/json");
        return false;
    }

    std::string fingerprint_;
    std::string token_;
    httplib::Server srv_;
    int port_ = 0;
    std::thread thread_;
    std::mutex mu_;
    Handler handler_;
};

}  // namespace mock
