#pragma once

// Zero-shot GLUE classification through task suppositions.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "entailfair/client.hpp"
#include "entailfair/corpus.hpp"
#include "entailfair/error.hpp"
#include "entailfair/scoring.hpp"

namespace entailfair {

enum class GlueTask { MNLI, RTE, QNLI, QQP, SST2 };

inline std::string_view to_string(GlueTask t) {
    switch (t) {
        case GlueTask::MNLI: return "MNLI";
        case GlueTask::RTE: return "RTE";
        case GlueTask::QNLI: return "QNLI";
        case GlueTask::QQP: return "QQP";
        case GlueTask::SST2: return "SST2";
    }
    return "?";
}

inline std::optional<GlueTask> parse_glue_task(std::string_view s) {
    std::string up;
    for (char c : s) up.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
    if (up == "MNLI") return GlueTask::MNLI;
    if (up == "RTE") return GlueTask::RTE;
    if (up == "QNLI") return GlueTask::QNLI;
    if (up == "QQP") return GlueTask::QQP;
    if (up == "SST2" || up == "SST-2") return GlueTask::SST2;
    return std::nullopt;
}

inline constexpr GlueTask kAllGlueTasks[] = {GlueTask::MNLI, GlueTask::RTE, GlueTask::QNLI, GlueTask::QQP, GlueTask::SST2};

// Dataset column feeding each role, in the GLUE dev-set layout.
struct RoleColumn {
    std::string role;
    std::string column;
};

struct TaskTemplate {
    GlueTask task;
    std::vector<RoleColumn> inputs;
    std::string hypothesis_pattern;  // rendered left of the connective
    std::string premise_pattern;     // rendered right of the connective
    std::string label_column;
    std::vector<std::string> labels;                         // task label set
    std::map<std::string, std::string> dataset_label_alias;  // raw dataset value -> task label

    std::string supposition_pattern() const { return hypothesis_pattern + std::string(kEntailedBy) + premise_pattern + "."; }
};

inline const TaskTemplate& task_template(GlueTask task) {
    static const std::map<GlueTask, TaskTemplate> templates = [] {
        std::map<GlueTask, TaskTemplate> m;
        m.emplace(GlueTask::MNLI, TaskTemplate{GlueTask::MNLI,
                                               {{"p", "sentence1"}, {"h", "sentence2"}},
                                               "{h}", "{p}", "gold_label",
                                               {"entailment", "neutral", "contradiction"}, {}});
        m.emplace(GlueTask::RTE, TaskTemplate{GlueTask::RTE,
                                              {{"p", "sentence1"}, {"h", "sentence2"}},
                                              "{h}", "{p}", "label",
                                              {"entailment", "not_entailment"}, {}});
        m.emplace(GlueTask::QNLI, TaskTemplate{GlueTask::QNLI,
                                               {{"p", "sentence"}, {"q", "question"}},
                                               "The answer to {q}", "{p}", "label",
                                               {"entailment", "not_entailment"}, {}});
        m.emplace(GlueTask::QQP, TaskTemplate{GlueTask::QQP,
                                              {{"x", "question1"}, {"y", "question2"}},
                                              "{x}'s answer", "{y}'s answer", "is_duplicate",
                                              {"duplicate", "not_duplicate"},
                                              {{"1", "duplicate"}, {"0", "not_duplicate"}}});
        m.emplace(GlueTask::SST2, TaskTemplate{GlueTask::SST2,
                                               {{"r", "sentence"}},
                                               "The movie is good", "{r}", "label",
                                               {"positive", "negative"},
                                               {{"1", "positive"}, {"0", "negative"}}});
        return m;
    }();
    return templates.at(task);
}

struct LabeledExample {
    std::map<std::string, std::string> inputs;  // role -> text
    std::string gold;
};

namespace detail {

inline std::string fill_slots(const std::string& pattern, const TaskTemplate& t, const LabeledExample& ex) {
    // Single left-to-right pass so slot-like text inside inputs is left alone.
    std::string out;
    std::size_t i = 0;
    while (i < pattern.size()) {
        const auto open = pattern.find('{', i);
        if (open == std::string::npos) break;
        const auto close = pattern.find('}', open);
        if (close == std::string::npos) break;
        out.append(pattern, i, open - i);
        const std::string role = pattern.substr(open + 1, close - open - 1);
        const auto it = ex.inputs.find(role);
        if (it == ex.inputs.end() || it->second.empty())
            throw ValidationError(std::string(to_string(t.task)) + " example is missing role '" + role + "'");
        out += it->second;
        i = close + 1;
    }
    out.append(pattern, i, std::string::npos);
    return out;
}

}  // namespace detail

struct TaskPair {
    std::string premise;
    std::string hypothesis;
    std::string supposition;
};

inline TaskPair render_task_pair(const TaskTemplate& t, const LabeledExample& ex) {
    for (const auto& rc : t.inputs) {
        const auto it = ex.inputs.find(rc.role);
        if (it == ex.inputs.end() || it->second.empty())
            throw ValidationError(std::string(to_string(t.task)) + " example is missing role '" + rc.role + "'");
    }
    TaskPair p;
    p.hypothesis = detail::fill_slots(t.hypothesis_pattern, t, ex);
    p.premise = detail::fill_slots(t.premise_pattern, t, ex);
    p.supposition = make_supposition(p.premise, p.hypothesis).text;
    return p;
}

inline std::string build_task_supposition(const TaskTemplate& t, const LabeledExample& ex) {
    return render_task_pair(t, ex).supposition;
}

// How three-way truth values map onto binary task labels.
enum class NeutralMapping { negative, positive };
enum class Sst2Rule { ignore_neutral, fold_neutral };

struct LabelMapping {
    NeutralMapping binary_neutral = NeutralMapping::negative;
    Sst2Rule sst2 = Sst2Rule::ignore_neutral;
};

inline nlohmann::json to_json(const LabelMapping& m) {
    return {{"binary_neutral", m.binary_neutral == NeutralMapping::negative ? "negative" : "positive"},
            {"sst2", m.sst2 == Sst2Rule::ignore_neutral ? "ignore_neutral" : "fold_neutral"}};
}

// MNLI: argmax (ties toward entailment). Binary tasks: the positive class
// needs a strict win; with neutral folded into the negative class that is
// p_true > max(p_neutral, p_false). SST2 compares p_true against p_false.
inline std::string predict_label(const Probabilities& p, const TaskTemplate& t, const LabelMapping& mapping = {}) {
    if (!on_simplex(p)) throw ContractError("predict_label: probabilities are not on the simplex");
    switch (t.task) {
        case GlueTask::MNLI: {
            const int label = discrete_judgment(PairScore::entailment(p)).label;
            return t.labels[static_cast<std::size_t>(label)];
        }
        case GlueTask::SST2: {
            const bool positive = mapping.sst2 == Sst2Rule::ignore_neutral ? p.p_true > p.p_false
                                                                           : p.p_true > std::max(p.p_neutral, p.p_false);
            return t.labels[positive ? 0 : 1];
        }
        case GlueTask::RTE:
        case GlueTask::QNLI:
        case GlueTask::QQP: {
            const bool positive = mapping.binary_neutral == NeutralMapping::negative
                                      ? p.p_true > std::max(p.p_neutral, p.p_false)
                                      : std::max(p.p_true, p.p_neutral) > p.p_false;
            return t.labels[positive ? 0 : 1];
        }
    }
    throw ValidationError("unknown task");
}

// ---------------------------------------------------------------------------
// Datasets

namespace detail {

inline std::string normalize_label(const TaskTemplate& t, std::string raw, const std::string& where) {
    if (auto it = t.dataset_label_alias.find(raw); it != t.dataset_label_alias.end()) raw = it->second;
    if (std::find(t.labels.begin(), t.labels.end(), raw) == t.labels.end())
        throw ValidationError(where + ": label '" + raw + "' is outside the " + std::string(to_string(t.task)) + " label set");
    return raw;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t c = 0;
    while (true) {
        const auto tab = line.find('\t', c);
        cols.push_back(line.substr(c, tab == std::string_view::npos ? std::string_view::npos : tab - c));
        if (tab == std::string_view::npos) break;
        c = tab + 1;
    }
    return cols;
}

}  // namespace detail

// GLUE dev-set TSV (header row, tab separated, no quoting) or JSON Lines
// with the same field names.
inline std::vector<LabeledExample> parse_glue_dataset(std::string_view text, const TaskTemplate& t) {
    std::vector<LabeledExample> out;
    const std::string_view body = trim(text);
    if (body.empty()) throw ParseError(std::string(to_string(t.task)) + " dataset is empty");

    auto add = [&](auto&& get, const std::string& where) {
        LabeledExample ex;
        for (const auto& rc : t.inputs) ex.inputs[rc.role] = get(rc.column);
        ex.gold = detail::normalize_label(t, get(t.label_column), where);
        out.push_back(std::move(ex));
    };

    std::size_t start = 0;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    const bool jsonl = body.front() == '{';
    while (start < text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) continue;
        const std::string where = std::string(to_string(t.task)) + " dataset line " + std::to_string(line_no);
        if (jsonl) {
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(where + ": " + e.what());
            }
            add([&](const std::string& col) {
                    if (!rec.contains(col)) throw ParseError(where + ": missing field '" + col + "'");
                    const auto& v = rec.at(col);
                    return v.is_string() ? v.get<std::string>() : v.dump();
                },
                where);
            continue;
        }
        const auto cols = detail::split_tabs(line);
        if (header.empty()) {
            for (auto c : cols) header.emplace_back(trim(c));
            for (const auto& rc : t.inputs)
                if (std::find(header.begin(), header.end(), rc.column) == header.end())
                    throw ParseError(where + ": header lacks column '" + rc.column + "'");
            if (std::find(header.begin(), header.end(), t.label_column) == header.end())
                throw ParseError(where + ": header lacks column '" + t.label_column + "'");
            continue;
        }
        add([&](const std::string& col) {
                const auto idx = static_cast<std::size_t>(std::find(header.begin(), header.end(), col) - header.begin());
                // MNLI puts gold_label last; rows may carry fewer annotator columns.
                if (col == t.label_column && t.task == GlueTask::MNLI) return std::string(trim(cols.back()));
                if (idx >= cols.size()) throw ParseError(where + ": row has no column '" + col + "'");
                return std::string(trim(cols[idx]));
            },
            where);
    }
    return out;
}

inline std::vector<LabeledExample> load_glue_dataset(const std::filesystem::path& path, const TaskTemplate& t) {
    return parse_glue_dataset(read_file(path), t);
}

inline PromptBattery build_task_battery(const TaskTemplate& t, const std::vector<LabeledExample>& examples) {
    PromptBattery b;
    b.name = "glue_" + std::string(to_string(t.task));
    b.pairs.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto tp = render_task_pair(t, examples[i]);
        PromptPair p;
        char id[48];
        std::snprintf(id, sizeof id, "%s:%06zu", std::string(to_string(t.task)).c_str(), i);
        p.id = p.group = id;
        p.premise = tp.premise;
        p.hypothesis = tp.hypothesis;
        p.text = tp.supposition;
        p.key = examples[i].gold;
        b.pairs.push_back(std::move(p));
    }
    return b;
}

struct ZeroShotReport {
    GlueTask task = GlueTask::MNLI;
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    std::map<std::string, std::map<std::string, std::size_t>> confusion;  // gold -> predicted -> count
    LabelMapping mapping;
};

inline ZeroShotReport evaluate_predictions(const TaskTemplate& t, const std::vector<LabeledExample>& examples,
                                           const std::vector<Probabilities>& probs, const LabelMapping& mapping = {}) {
    if (examples.size() != probs.size()) throw ValidationError("evaluate: example/score count mismatch");
    if (examples.empty()) throw ValidationError("evaluate: empty dataset");
    ZeroShotReport r;
    r.task = t.task;
    r.mapping = mapping;
    r.n = examples.size();
    for (const auto& g : t.labels)
        for (const auto& p : t.labels) r.confusion[g][p] = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto pred = predict_label(probs[i], t, mapping);
        ++r.confusion[examples[i].gold][pred];
        if (pred == examples[i].gold) ++r.correct;
    }
    r.accuracy = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.n);
    return r;
}

inline ZeroShotReport evaluate_task(GlueTask task, const std::vector<LabeledExample>& examples, const ScorerEndpoint& endpoint,
                                    ScoreCache& cache, ScorerBackend* backend = nullptr, const LabelMapping& mapping = {}) {
    const auto& t = task_template(task);
    auto ep = endpoint;
    ep.mode = ScoreMode::entailment;
    const auto battery = build_task_battery(t, examples);
    const auto scored = score_battery(ep, battery, cache, backend);
    std::vector<Probabilities> probs;
    probs.reserve(battery.pairs.size());
    for (const auto& p : battery.pairs) probs.push_back(scored.scores.at(p.id).probabilities());
    return evaluate_predictions(t, examples, probs, mapping);
}

inline ZeroShotReport evaluate_task(GlueTask task, const std::filesystem::path& dataset, const ScorerEndpoint& endpoint,
                                    ScoreCache& cache, ScorerBackend* backend = nullptr, const LabelMapping& mapping = {}) {
    return evaluate_task(task, load_glue_dataset(dataset, task_template(task)), endpoint, cache, backend, mapping);
}

inline nlohmann::json to_json(const ZeroShotReport& r) {
    nlohmann::json confusion = nlohmann::json::object();
    for (const auto& [gold, row] : r.confusion)
        for (const auto& [pred, count] : row) confusion[gold][pred] = count;
    return {{"task", to_string(r.task)},
            {"n", r.n},
            {"correct", r.correct},
            {"accuracy", r.accuracy},
            {"confusion", confusion},
            {"label_mapping", to_json(r.mapping)}};
}

}  // namespace entailfair
