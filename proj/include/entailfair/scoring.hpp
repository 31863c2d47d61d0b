#pragma once

// Pairwise scores and the three preference rules built on them.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "entailfair/error.hpp"
#include "entailfair/util.hpp"

namespace entailfair {

inline constexpr std::string_view kEntailedBy = " is entailed by ";

struct Supposition {
    std::string text;
    std::string premise;
    std::string hypothesis;
};

namespace detail {

inline std::string_view without_final_period(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    return s;
}

}  // namespace detail

// "<h> is entailed by <p>." A sentence-final period on either side is
// dropped so the supposition reads as one sentence.
inline Supposition make_supposition(std::string premise, std::string hypothesis) {
    if (premise.empty() || hypothesis.empty()) throw ValidationError("make_supposition: empty premise or hypothesis");
    const auto h = detail::without_final_period(hypothesis);
    const auto p = detail::without_final_period(premise);
    if (h.empty() || p.empty()) throw ValidationError("make_supposition: empty premise or hypothesis");
    Supposition s;
    s.text = std::string(h) + std::string(kEntailedBy) + std::string(p) + ".";
    s.premise = std::move(premise);
    s.hypothesis = std::move(hypothesis);
    return s;
}

// Inverse of make_supposition; defined when exactly one connective occurs.
inline std::optional<Supposition> parse_supposition(std::string_view text) {
    if (text.empty() || text.back() != '.') return std::nullopt;
    const auto pos = text.find(kEntailedBy);
    if (pos == std::string_view::npos || text.find(kEntailedBy, pos + 1) != std::string_view::npos) return std::nullopt;
    std::string hypothesis(text.substr(0, pos));
    std::string premise(text.substr(pos + kEntailedBy.size(), text.size() - pos - kEntailedBy.size() - 1));
    if (premise.empty() || hypothesis.empty()) return std::nullopt;
    return Supposition{std::string(text), std::move(premise), std::move(hypothesis)};
}

inline constexpr double kSimplexTolerance = 1e-6;

struct Probabilities {
    double p_true = 0.0;
    double p_neutral = 0.0;
    double p_false = 0.0;

    friend bool operator==(const Probabilities&, const Probabilities&) = default;
};

inline bool on_simplex(const Probabilities& p, double tol = kSimplexTolerance) noexcept {
    for (double v : {p.p_true, p.p_neutral, p.p_false})
        if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) return false;
    return std::abs(p.p_true + p.p_neutral + p.p_false - 1.0) <= tol;
}

enum class ScoreKind { similarity, entailment };

// Exactly one payload: a similarity scalar or an entailment triple in the
// fixed (true, neutral, false) order.
class PairScore {
public:
    static PairScore similarity(double value) {
        if (!std::isfinite(value)) throw ContractError("similarity score is not finite");
        PairScore s;
        s.kind_ = ScoreKind::similarity;
        s.similarity_ = value;
        return s;
    }

    static PairScore entailment(Probabilities probs) {
        if (!on_simplex(probs)) {
            throw ContractError("entailment probabilities (" + std::to_string(probs.p_true) + ", " +
                                std::to_string(probs.p_neutral) + ", " + std::to_string(probs.p_false) +
                                ") are not on the probability simplex");
        }
        PairScore s;
        s.kind_ = ScoreKind::entailment;
        s.probs_ = probs;
        return s;
    }

    ScoreKind kind() const noexcept { return kind_; }

    double similarity_value() const {
        if (kind_ != ScoreKind::similarity) throw ValidationError("score is not a similarity score");
        return similarity_;
    }

    const Probabilities& probabilities() const {
        if (kind_ != ScoreKind::entailment) throw ValidationError("score is not an entailment score");
        return probs_;
    }

    friend bool operator==(const PairScore& a, const PairScore& b) {
        if (a.kind_ != b.kind_) return false;
        return a.kind_ == ScoreKind::similarity ? a.similarity_ == b.similarity_ : a.probs_ == b.probs_;
    }

private:
    ScoreKind kind_ = ScoreKind::similarity;
    double similarity_ = 0.0;
    Probabilities probs_{};
};

// Outcome of comparing option a against option b.
enum class Preference { first, second, equal };

inline Preference flip(Preference p) noexcept {
    return p == Preference::first ? Preference::second : p == Preference::second ? Preference::first : p;
}

inline std::string_view to_string(Preference p) {
    return p == Preference::first ? "first" : p == Preference::second ? "second" : "equal";
}

struct EntailmentJudgment {
    int label = 1;        // entail = 0, neutral = 1, contradictory = 2
    double margin = 0.0;  // p_true - p_false

    friend bool operator==(const EntailmentJudgment&, const EntailmentJudgment&) = default;
};

// Argmax under the fixed order; exact ties go to the smaller label.
inline EntailmentJudgment discrete_judgment(const PairScore& s) {
    const auto& p = s.probabilities();
    int label = 0;
    double best = p.p_true;
    if (p.p_neutral > best) label = 1, best = p.p_neutral;
    if (p.p_false > best) label = 2;
    return {label, p.p_true - p.p_false};
}

// Higher p_true wins; at equal p_true, lower p_false wins.
inline Preference continuous_preference(const PairScore& a, const PairScore& b) {
    if (a.kind() != ScoreKind::entailment || b.kind() != ScoreKind::entailment)
        throw ValidationError("continuous_preference requires entailment scores");
    const auto& pa = a.probabilities();
    const auto& pb = b.probabilities();
    if (pa.p_true != pb.p_true) return pa.p_true > pb.p_true ? Preference::first : Preference::second;
    if (pa.p_false != pb.p_false) return pa.p_false < pb.p_false ? Preference::first : Preference::second;
    return Preference::equal;
}

// Smaller label wins; equal labels fall back to the margin.
inline Preference discrete_preference(const EntailmentJudgment& a, const EntailmentJudgment& b) noexcept {
    if (a.label != b.label) return a.label < b.label ? Preference::first : Preference::second;
    if (a.margin != b.margin) return a.margin > b.margin ? Preference::first : Preference::second;
    return Preference::equal;
}

inline Preference similarity_preference(const PairScore& a, const PairScore& b) {
    if (a.kind() != ScoreKind::similarity || b.kind() != ScoreKind::similarity)
        throw ValidationError("similarity_preference requires similarity scores");
    const double x = a.similarity_value();
    const double y = b.similarity_value();
    if (x == y) return Preference::equal;
    return x > y ? Preference::first : Preference::second;
}

enum class Strategy { similarity, ent_continuous, ent_discrete };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::similarity: return "similarity";
        case Strategy::ent_continuous: return "ent-continuous";
        case Strategy::ent_discrete: return "ent-discrete";
    }
    return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
    if (s == "similarity") return Strategy::similarity;
    if (s == "ent-continuous" || s == "ent_continuous") return Strategy::ent_continuous;
    if (s == "ent-discrete" || s == "ent_discrete") return Strategy::ent_discrete;
    return std::nullopt;
}

inline ScoreKind kind_for(Strategy s) noexcept {
    return s == Strategy::similarity ? ScoreKind::similarity : ScoreKind::entailment;
}

inline Preference prefer(Strategy strategy, const PairScore& a, const PairScore& b) {
    switch (strategy) {
        case Strategy::similarity: return similarity_preference(a, b);
        case Strategy::ent_continuous: return continuous_preference(a, b);
        case Strategy::ent_discrete: {
            if (a.kind() != ScoreKind::entailment || b.kind() != ScoreKind::entailment)
                throw ValidationError("discrete strategy requires entailment scores");
            return discrete_preference(discrete_judgment(a), discrete_judgment(b));
        }
    }
    throw ValidationError("unknown strategy");
}

}  // namespace entailfair
