#pragma once

// Report serialization. JSON carries full-precision values; CSV and
// Markdown tables are rounded to two decimals for reading.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entailfair/analysis.hpp"
#include "entailfair/metrics.hpp"
#include "entailfair/util.hpp"

namespace entailfair {

inline nlohmann::json to_json(const StereoScores& s) {
    return {{"lms", s.lms},
            {"ss", s.ss},
            {"fs", s.fs},
            {"icat", s.icat},
            {"n", s.n},
            {"related_wins", s.related_wins},
            {"stereo_wins", s.stereo_wins},
            {"anti_wins", s.anti_wins},
            {"ties", s.ties},
            {"tie_rate", s.tie_rate}};
}

inline nlohmann::json to_json(const StereoMetrics& m) {
    nlohmann::json by_domain = nlohmann::json::object();
    for (const auto& [d, s] : m.breakdown) by_domain[d] = to_json(s);
    return {{"overall", to_json(m.overall)}, {"by_domain", by_domain}};
}

inline nlohmann::json to_json(const BreakdownRow& r, const std::vector<std::string>& columns) {
    nlohmann::json j = {{"key", r.key}, {"n", r.n}};
    for (std::size_t i = 0; i < columns.size() && i < r.values.size(); ++i) j[columns[i]] = r.values[i];
    return j;
}

inline nlohmann::json to_json(const BreakdownTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back(to_json(r, t.columns));
    return {{"columns", t.columns}, {"rows", rows}, {"overall", to_json(t.overall, t.columns)}};
}

inline nlohmann::json to_json(const RecognitionMetrics& m) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : m.terms)
        terms.push_back({{"term", t.term}, {"side", to_string(t.side)}, {"pair_index", t.pair_index}, {"correct", t.correct}});
    return {{"grs_mean", m.grs_mean}, {"grs_std", m.grs_std}, {"pair_accuracy", m.pair_accuracy}, {"terms", terms}};
}

inline nlohmann::json to_json(const GenderMetrics& m) {
    nlohmann::json per_term = nlohmann::json::array();
    for (const auto& b : m.per_term)
        per_term.push_back({{"term", b.term},
                            {"gbs", b.gbs},
                            {"fs", b.fs},
                            {"comparisons", b.comparisons},
                            {"masc_wins", b.masc_wins},
                            {"ties", b.ties}});
    return {{"grs_mean", m.grs_mean}, {"grs_std", m.grs_std}, {"fs_mean", m.fs_mean},
            {"fs_std", m.fs_std},     {"icat", m.icat},         {"per_term", per_term}};
}

inline nlohmann::json to_json(const BoundaryReport& b) {
    return {{"separation_accuracy", b.separation_accuracy},
            {"weight_vector", b.weight_vector},
            {"bias", b.bias},
            {"n", b.n},
            {"epochs", b.epochs}};
}

inline nlohmann::json to_json(const std::vector<NeighborGroup>& groups) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& g : groups) out.push_back({{"terms", g.terms}, {"cohesion", g.cohesion}});
    return out;
}

inline nlohmann::json to_json(const Projection& p) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < p.terms.size(); ++i)
        out.push_back({{"term", p.terms[i]}, {"x", p.coords[i][0]}, {"y", p.coords[i][1]}});
    return out;
}

// ---------------------------------------------------------------------------
// Plain text tables

struct TextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c;
    }
    return o + "\"";
}

inline std::string to_csv(const TextTable& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline std::string to_markdown(const TextTable& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        out += '|';
        for (const auto& c : cells) {
            std::string cell = c;
            for (std::size_t p = cell.find('|'); p != std::string::npos; p = cell.find('|', p + 2)) cell.replace(p, 1, "\\|");
            out += ' ' + cell + " |";
        }
        out += '\n';
    };
    line(t.header);
    out += '|';
    for (std::size_t i = 0; i < t.header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
    out += '\n';
    for (const auto& r : t.rows) line(r);
    return out;
}

inline TextTable text_table(const BreakdownTable& b, const std::string& key_name) {
    TextTable t;
    t.header.push_back(key_name);
    t.header.push_back("n");
    for (const auto& c : b.columns) t.header.push_back(c);
    auto add = [&](const BreakdownRow& r) {
        std::vector<std::string> cells{r.key, std::to_string(r.n)};
        for (double v : r.values) cells.push_back(format_fixed(v));
        t.rows.push_back(std::move(cells));
    };
    for (const auto& r : b.rows) add(r);
    add(b.overall);
    return t;
}

inline std::string clusters_markdown(const std::string& title, const std::vector<NeighborGroup>& groups) {
    std::string out = "## " + title + "\n\n";
    if (groups.empty()) return out + "No mutual-neighbour groups.\n";
    TextTable t{{"rank", "terms", "cohesion"}, {}};
    for (std::size_t i = 0; i < groups.size(); ++i) {
        std::string terms;
        for (const auto& s : groups[i].terms) terms += (terms.empty() ? "" : ", ") + s;
        t.rows.push_back({std::to_string(i + 1), terms, format_fixed(groups[i].cohesion, 3)});
    }
    return out + to_markdown(t);
}

}  // namespace entailfair
