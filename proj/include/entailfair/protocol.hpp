#pragma once

// Scorer wire protocol (JSON over HTTP).
//
//   POST /score   {"mode": "...", "measure": "cosine"|"dot",
//                  "pairs": [{"id", "premise", "hypothesis"[, "text"]}]}
//             ->  {"fingerprint": "...",
//                  "scores": [{"id", "similarity"} |
//                             {"id", "p_true", "p_neutral", "p_false"} |
//                             {"id", "embedding": [...]} |
//                             {"id", "error"}]}
//   GET /fingerprint -> {"fingerprint": "..."}
//   GET /health      -> {"status": "ok"}
//
// Entailment requests carry the rendered supposition in "text" alongside the
// pair; embedding requests carry the prompt to embed in "text".

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "entailfair/error.hpp"
#include "entailfair/scoring.hpp"

namespace entailfair {

enum class ScoreMode { similarity, entailment, embedding };
enum class SimilarityMeasure { cosine, dot };

inline std::string_view to_string(ScoreMode m) {
    switch (m) {
        case ScoreMode::similarity: return "similarity";
        case ScoreMode::entailment: return "entailment";
        case ScoreMode::embedding: return "embedding";
    }
    return "?";
}

inline std::optional<ScoreMode> parse_score_mode(std::string_view s) {
    if (s == "similarity") return ScoreMode::similarity;
    if (s == "entailment") return ScoreMode::entailment;
    if (s == "embedding") return ScoreMode::embedding;
    return std::nullopt;
}

inline std::string_view to_string(SimilarityMeasure m) { return m == SimilarityMeasure::cosine ? "cosine" : "dot"; }

inline std::optional<SimilarityMeasure> parse_similarity_measure(std::string_view s) {
    if (s == "cosine") return SimilarityMeasure::cosine;
    if (s == "dot") return SimilarityMeasure::dot;
    return std::nullopt;
}

struct WireItem {
    std::string id;
    std::string premise;
    std::string hypothesis;
    std::string text;
};

struct WireRequest {
    ScoreMode mode = ScoreMode::entailment;
    SimilarityMeasure measure = SimilarityMeasure::cosine;
    std::vector<WireItem> pairs;
};

struct WireScore {
    std::string id;
    std::optional<double> similarity;
    std::optional<Probabilities> probs;
    std::optional<std::vector<double>> embedding;
    std::optional<std::string> error;
};

struct WireResponse {
    std::string fingerprint;
    std::vector<WireScore> scores;
};

inline nlohmann::json to_json(const WireRequest& req) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& item : req.pairs) {
        nlohmann::json j = {{"id", item.id}, {"premise", item.premise}, {"hypothesis", item.hypothesis}};
        if (!item.text.empty()) j["text"] = item.text;
        pairs.push_back(std::move(j));
    }
    nlohmann::json out = {{"mode", to_string(req.mode)}, {"pairs", std::move(pairs)}};
    if (req.mode == ScoreMode::similarity) out["measure"] = to_string(req.measure);
    return out;
}

inline WireRequest request_from_json(const nlohmann::json& j) {
    WireRequest req;
    try {
        const auto mode = parse_score_mode(j.at("mode").get<std::string>());
        if (!mode) throw ContractError("unknown mode");
        req.mode = *mode;
        if (j.contains("measure")) {
            const auto m = parse_similarity_measure(j.at("measure").get<std::string>());
            if (!m) throw ContractError("unknown measure");
            req.measure = *m;
        }
        for (const auto& p : j.at("pairs")) {
            WireItem item;
            item.id = p.at("id").get<std::string>();
            item.premise = p.value("premise", "");
            item.hypothesis = p.value("hypothesis", "");
            item.text = p.value("text", "");
            req.pairs.push_back(std::move(item));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("malformed request: ") + e.what());
    }
    return req;
}

inline nlohmann::json to_json(const WireScore& s) {
    nlohmann::json j = {{"id", s.id}};
    if (s.error) j["error"] = *s.error;
    if (s.similarity) j["similarity"] = *s.similarity;
    if (s.probs) {
        j["p_true"] = s.probs->p_true;
        j["p_neutral"] = s.probs->p_neutral;
        j["p_false"] = s.probs->p_false;
    }
    if (s.embedding) j["embedding"] = *s.embedding;
    return j;
}

inline nlohmann::json to_json(const WireResponse& r) {
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& s : r.scores) scores.push_back(to_json(s));
    nlohmann::json out = {{"scores", std::move(scores)}};
    if (!r.fingerprint.empty()) out["fingerprint"] = r.fingerprint;
    return out;
}

inline WireScore score_from_json(const nlohmann::json& j) {
    WireScore s;
    s.id = j.at("id").get<std::string>();
    if (j.contains("error")) s.error = j.at("error").is_string() ? j.at("error").get<std::string>() : j.at("error").dump();
    if (j.contains("similarity")) s.similarity = j.at("similarity").get<double>();
    if (j.contains("p_true") || j.contains("p_neutral") || j.contains("p_false"))
        s.probs = Probabilities{j.at("p_true").get<double>(), j.at("p_neutral").get<double>(), j.at("p_false").get<double>()};
    if (j.contains("embedding")) s.embedding = j.at("embedding").get<std::vector<double>>();
    return s;
}

inline WireResponse response_from_json(const nlohmann::json& j) {
    WireResponse r;
    try {
        if (j.contains("fingerprint")) r.fingerprint = j.at("fingerprint").get<std::string>();
        for (const auto& s : j.at("scores")) r.scores.push_back(score_from_json(s));
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("malformed response: ") + e.what());
    }
    return r;
}

}  // namespace entailfair
