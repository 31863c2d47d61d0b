#pragma once

// End-to-end runs: load inputs, build batteries, score, compute metrics and
// write a report bundle. Also the bundle comparison used to put two scorers
// side by side.
//
// Bundle layout (under the output directory):
//   reports/<suite>.json        full-precision metrics plus run metadata
//   outcomes/<suite>.jsonl      per-test selections (StereoSet suites)
//   batteries/<name>.jsonl      every prompt pair that was scored
//   embeddings/, figures/       embedding probe dumps, coordinates and SVGs
//   summary.{json,csv,md}       one row in the shape of the results table
//   manifest.json               config, input checksums, fingerprints
//   error_report.json           only when a suite failed

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entailfair/analysis.hpp"
#include "entailfair/client.hpp"
#include "entailfair/corpus.hpp"
#include "entailfair/metrics.hpp"
#include "entailfair/report.hpp"
#include "entailfair/zeroshot.hpp"

namespace entailfair {

enum class Suite { stereoset_intra, stereoset_inter, gender_recognition, profession, emotion, glue, embedding_analysis };

inline constexpr Suite kAllSuites[] = {Suite::stereoset_intra, Suite::stereoset_inter, Suite::gender_recognition,
                                       Suite::profession,      Suite::emotion,         Suite::glue,
                                       Suite::embedding_analysis};

inline std::string_view to_string(Suite s) {
    switch (s) {
        case Suite::stereoset_intra: return "stereoset_intra";
        case Suite::stereoset_inter: return "stereoset_inter";
        case Suite::gender_recognition: return "gender_recognition";
        case Suite::profession: return "profession";
        case Suite::emotion: return "emotion";
        case Suite::glue: return "glue";
        case Suite::embedding_analysis: return "embedding_analysis";
    }
    return "?";
}

inline std::optional<Suite> parse_suite(std::string_view s) {
    for (Suite x : kAllSuites)
        if (to_string(x) == s) return x;
    return std::nullopt;
}

inline std::optional<TiePolicy> parse_tie_policy(std::string_view s) {
    if (s == "exclude") return TiePolicy::exclude;
    if (s == "half") return TiePolicy::half;
    return std::nullopt;
}

struct DataPaths {
    std::filesystem::path stereoset;  // published dev/test JSON or flat JSON Lines
    std::filesystem::path gender_pairs;
    std::filesystem::path professions;
    std::filesystem::path emotion_states;
    std::filesystem::path emotion_situations;
    std::map<GlueTask, std::filesystem::path> glue;
};

struct RunConfig {
    std::vector<Suite> suites;
    ScorerEndpoint endpoint;
    Strategy strategy = Strategy::ent_continuous;
    DataPaths paths;
    std::filesystem::path output_dir;
    std::optional<std::uint64_t> seed;
    TiePolicy tie_policy = TiePolicy::exclude;
    LabelMapping label_mapping;
    std::string label;             // scorer name in summary tables; defaults to the fingerprint
    std::size_t cluster_k = 3;     // neighbours for the projection groups
    bool parallel_suites = false;  // outputs are identical either way
};

// Every problem at once, so a bad invocation is fixed in one round.
inline std::vector<std::string> config_problems(const RunConfig& c) {
    std::vector<std::string> out;
    auto need = [&](Suite s, const std::filesystem::path& p, const char* what) {
        if (p.empty()) out.push_back(std::string(to_string(s)) + " requires " + what);
        else if (!std::filesystem::exists(p)) out.push_back(std::string(what) + " not found: " + p.string());
    };
    if (c.suites.empty()) out.push_back("no suite selected");
    std::set<Suite> seen;
    for (Suite s : c.suites)
        if (!seen.insert(s).second) out.push_back("suite listed twice: " + std::string(to_string(s)));
    if (c.output_dir.empty()) out.push_back("output directory is required");
    for (Suite s : seen) {
        switch (s) {
            case Suite::stereoset_intra:
            case Suite::stereoset_inter: need(s, c.paths.stereoset, "the StereoSet file"); break;
            case Suite::gender_recognition: need(s, c.paths.gender_pairs, "the gender pair file"); break;
            case Suite::profession:
                need(s, c.paths.gender_pairs, "the gender pair file");
                need(s, c.paths.professions, "the profession list");
                break;
            case Suite::emotion:
                need(s, c.paths.gender_pairs, "the gender pair file");
                need(s, c.paths.emotion_states, "the emotion state list");
                need(s, c.paths.emotion_situations, "the emotion situation list");
                break;
            case Suite::glue:
                if (c.strategy == Strategy::similarity) out.push_back("glue requires an entailment strategy");
                if (c.paths.glue.empty()) out.push_back("glue requires at least one task dataset");
                for (const auto& [task, p] : c.paths.glue) need(s, p, "the GLUE dataset");
                break;
            case Suite::embedding_analysis:
                need(s, c.paths.gender_pairs, "the gender pair file");
                need(s, c.paths.professions, "the profession list");
                need(s, c.paths.emotion_states, "the emotion state list");
                need(s, c.paths.emotion_situations, "the emotion situation list");
                if (!c.seed) out.push_back("embedding_analysis requires a seed");
                if (c.cluster_k == 0) out.push_back("cluster k must be positive");
                break;
        }
    }
    const auto& ep = c.endpoint;
    if (ep.transport == Transport::wire && ep.address.empty()) out.push_back("wire transport requires an endpoint address");
    if (ep.transport == Transport::cache) {
        if (ep.cache_path.empty()) out.push_back("cache transport requires a cache path");
        else if (!std::filesystem::exists(ep.cache_path)) out.push_back("score cache not found: " + ep.cache_path.string());
    }
    if (ep.batch_size == 0) out.push_back("batch size must be positive");
    if (ep.concurrency == 0) out.push_back("concurrency must be positive");
    return out;
}

inline void validate(const RunConfig& c) {
    const auto problems = config_problems(c);
    if (problems.empty()) return;
    std::string msg = "invalid run configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
}

// Flags that change metric values; bundles are comparable only when they agree.
inline nlohmann::json decision_flags(const RunConfig& c) {
    nlohmann::json j = {{"tie_policy", to_string(c.tie_policy)},
                        {"similarity", to_string(c.endpoint.measure)},
                        {"label_mapping", to_json(c.label_mapping)}};
    j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
    return j;
}

struct RunOutcome {
    int exit_code = 0;
    nlohmann::json summary;
    nlohmann::json errors = nlohmann::json::array();
};

namespace detail {

struct SuiteResult {
    Suite suite{};
    nlohmann::json report;
    std::vector<std::pair<std::string, double>> summary;  // ordered metric columns
    std::map<std::string, std::string> files;              // bundle-relative path -> contents
    std::vector<std::string> batteries;                    // cache ids
    std::string fingerprint;
    nlohmann::json scoring;  // transport statistics (manifest only)
};

inline nlohmann::json stats_json(const ScoreStats& s) {
    return {{"cache_hits", s.cache_hits}, {"wire_items", s.wire_items}, {"wire_calls", s.wire_calls}};
}

class Runner {
public:
    Runner(const RunConfig& config, ScoreCache& cache, ScorerBackend* backend)
        : cfg_(config), cache_(cache), backend_(backend) {
        ep_ = cfg_.endpoint;
        ep_.mode = cfg_.strategy == Strategy::similarity ? ScoreMode::similarity : ScoreMode::entailment;
    }

    SuiteResult run(Suite s) {
        SuiteResult r;
        r.suite = s;
        switch (s) {
            case Suite::stereoset_intra: stereoset(r, Section::intra); break;
            case Suite::stereoset_inter: stereoset(r, Section::inter); break;
            case Suite::gender_recognition: recognition_suite(r); break;
            case Suite::profession: attribute_suite(r, professions(), "profession"); break;
            case Suite::emotion: attribute_suite(r, emotions(), "emotion"); break;
            case Suite::glue: glue(r); break;
            case Suite::embedding_analysis: embedding(r); break;
        }
        r.report["suite"] = to_string(s);
        r.report["metadata"] = metadata(r);
        return r;
    }

private:
    nlohmann::json metadata(const SuiteResult& r) const {
        const bool emb = r.suite == Suite::embedding_analysis;
        return {{"strategy", to_string(cfg_.strategy)},
                {"mode", emb ? mode_key(ScoreMode::embedding, ep_.measure) : mode_key(ep_)},
                {"fingerprint", r.fingerprint},
                {"flags", decision_flags(cfg_)},
                {"batteries", r.batteries}};
    }

    ScoreResult score(SuiteResult& r, const PromptBattery& b) {
        auto res = score_battery(ep_, b, cache_, backend_);
        note(r, b, res.stats);
        return res;
    }

    void note(SuiteResult& r, const PromptBattery& b, const ScoreStats& stats) {
        r.batteries.push_back(b.cache_id());
        r.fingerprint = stats.fingerprint;
        r.scoring[b.name] = stats_json(stats);
        r.files["batteries/" + b.name + ".jsonl"] = battery_manifest(b);
    }

    void stereoset(SuiteResult& r, Section section) {
        const auto load = load_stereoset(cfg_.paths.stereoset, section);
        const std::string name = "stereoset_" + std::string(to_string(section));
        const auto built = build_stereoset_battery(load.tests, name);
        const auto scored = score(r, built.battery);
        const auto outcomes = select_all(built.battery, scored.scores, cfg_.strategy);
        const auto metrics = stereoset_metrics(outcomes, cfg_.tie_policy);

        nlohmann::json rejected = nlohmann::json::array();
        for (const auto& x : load.rejected) rejected.push_back({{"id", x.id}, {"reason", x.reason}});
        for (const auto& x : built.skipped) rejected.push_back({{"id", x.id}, {"reason", x.reason}});
        nlohmann::json per_domain = nlohmann::json::object();
        for (const auto& [d, n] : load.per_domain) per_domain[std::string(to_string(d))] = n;
        r.report["counts"] = {{"tests", outcomes.size()}, {"pairs", built.battery.pairs.size()},
                              {"per_domain", per_domain}};
        r.report["rejected"] = rejected;
        r.report["metrics"] = to_json(metrics);
        r.report["breakdown"] = to_json(breakdown_report(outcomes, cfg_.tie_policy));

        std::string lines;
        for (const auto& o : outcomes) {
            lines += nlohmann::json{{"id", o.test_id},
                                    {"domain", o.domain},
                                    {"chosen", to_string(o.chosen)},
                                    {"related_beats_unrelated", o.related_beats_unrelated},
                                    {"stereo_beats_anti", to_string(o.stereo_beats_anti)}}
                         .dump();
            lines += '\n';
        }
        r.files["outcomes/" + name + ".jsonl"] = lines;
        const auto& m = metrics.overall;
        r.summary = {{"lms", m.lms}, {"ss", m.ss}, {"fs", m.fs}, {"icat", m.icat}};
    }

    const std::vector<GenderTermPair>& pairs() {
        std::lock_guard lock(mu_);
        if (!pairs_) pairs_ = load_gender_pairs(cfg_.paths.gender_pairs);
        return *pairs_;
    }

    std::vector<AttributeTerm> professions() const {
        return load_attribute_terms(cfg_.paths.professions, AttributeKind::profession);
    }

    std::vector<AttributeTerm> emotions() const {
        auto terms = load_attribute_terms(cfg_.paths.emotion_states, AttributeKind::emotion_state);
        const auto situations = load_attribute_terms(cfg_.paths.emotion_situations, AttributeKind::emotion_situation);
        terms.insert(terms.end(), situations.begin(), situations.end());
        return terms;
    }

    struct Recognition {
        PromptBattery battery;
        ScoreStats stats;
        RecognitionMetrics metrics;
    };

    // Shared by the recognition, profession and emotion suites.
    const Recognition& recognition() {
        const auto& gp = pairs();
        std::lock_guard lock(rec_mu_);
        if (!recognition_) {
            Recognition rec;
            rec.battery = build_gender_recognition(gp);
            auto res = score_battery(ep_, rec.battery, cache_, backend_);
            rec.stats = res.stats;
            rec.metrics = gender_recognition_metrics(rec.battery, res.scores, cfg_.strategy);
            recognition_ = std::move(rec);
        }
        return *recognition_;
    }

    void recognition_suite(SuiteResult& r) {
        const auto& rec = recognition();
        note(r, rec.battery, rec.stats);
        r.report["counts"] = {{"pairs", rec.battery.pairs.size()}, {"noun_pairs", rec.metrics.pair_accuracy.size()}};
        r.report["metrics"] = to_json(rec.metrics);
        r.summary = {{"grs_mean", rec.metrics.grs_mean}, {"grs_std", rec.metrics.grs_std}};
    }

    void attribute_suite(SuiteResult& r, const std::vector<AttributeTerm>& terms, const std::string& name) {
        const auto& rec = recognition();
        note(r, rec.battery, rec.stats);
        const auto battery = build_attribute_battery(terms, pairs(), name);
        const auto scored = score(r, battery);
        const auto m = attribute_bias_metrics(battery, scored.scores, cfg_.strategy, rec.metrics.grs_mean,
                                              rec.metrics.grs_std);
        r.report["counts"] = {{"terms", terms.size()},
                              {"noun_pairs", pairs().size()},
                              {"comparisons", battery.pairs.size() / 2},
                              {"pairs", battery.pairs.size()}};
        r.report["metrics"] = to_json(m);
        r.report["breakdown"] = to_json(breakdown_report(m));
        r.summary = {{"grs_mean", m.grs_mean}, {"grs_std", m.grs_std}, {"fs_mean", m.fs_mean},
                     {"fs_std", m.fs_std},     {"icat", m.icat}};
    }

    void glue(SuiteResult& r) {
        nlohmann::json tasks = nlohmann::json::array();
        for (GlueTask task : kAllGlueTasks) {
            const auto it = cfg_.paths.glue.find(task);
            if (it == cfg_.paths.glue.end()) continue;
            const auto& t = task_template(task);
            const auto examples = load_glue_dataset(it->second, t);
            const auto battery = build_task_battery(t, examples);
            const auto scored = score(r, battery);
            std::vector<Probabilities> probs;
            for (const auto& p : battery.pairs) probs.push_back(scored.scores.at(p.id).probabilities());
            const auto rep = evaluate_predictions(t, examples, probs, cfg_.label_mapping);
            tasks.push_back(to_json(rep));
            r.summary.emplace_back(std::string(to_string(task)) + "_accuracy", rep.accuracy);
        }
        r.report["tasks"] = tasks;
    }

    void embedding(SuiteResult& r) {
        const auto& gp = pairs();
        const auto prof = professions();
        const auto emo = emotions();
        std::vector<AttributeTerm> attrs = prof;
        attrs.insert(attrs.end(), emo.begin(), emo.end());
        const auto battery = build_embedding_battery(gp, attrs, "embedding");
        auto ep = ep_;
        ep.mode = ScoreMode::embedding;
        const auto res = fetch_embeddings(ep, battery, cache_, backend_);
        note(r, battery, res.stats);

        const auto source = cfg_.strategy == Strategy::similarity ? EmbeddingSource::sentence_embedding
                                                                  : EmbeddingSource::entailment_prompt_embedding;
        EmbeddingSet gendered, professions_set, emotions_set;
        gendered.source = professions_set.source = emotions_set.source = source;
        const std::size_t n_prof = prof.size();
        std::size_t attr_index = 0;
        for (const auto& p : battery.pairs) {
            EmbeddingItem item{p.key, TermGroup::attribute, res.vectors.at(p.id)};
            if (p.role == RoleTag::masc || p.role == RoleTag::fem) {
                item.group = p.role == RoleTag::masc ? TermGroup::masculine : TermGroup::feminine;
                gendered.items.push_back(std::move(item));
            } else {
                (attr_index++ < n_prof ? professions_set : emotions_set).items.push_back(std::move(item));
            }
        }

        SplitMix64 seeds(*cfg_.seed);
        const auto boundary = fit_linear_boundary(gendered);
        r.report["source"] = to_string(source);
        r.report["dimension"] = gendered.dim();
        r.report["boundary"] = to_json(boundary);

        nlohmann::json sets = nlohmann::json::array();
        std::string clusters_md = "# Neighbour groups\n\n";
        auto analyse = [&](const std::string& name, const EmbeddingSet& set, bool with_boundary) {
            const std::uint64_t seed = seeds.next();
            const std::size_t n = set.items.size();
            TsneOptions opt;
            opt.seed = seed;
            opt.perplexity = default_perplexity(n);
            // Small vocabularies cannot support the default perplexity.
            opt.perplexity = std::min(opt.perplexity, (static_cast<double>(n) - 1.0) / 3.0 - 1e-9);
            const auto proj = project_2d(set, opt);
            const std::size_t k = std::min(cfg_.cluster_k, n - 1);
            const auto groups = neighbor_clusters(proj, k);

            std::vector<PlotPoint> pts;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& it = set.items[i];
                int side = 0;
                if (with_boundary) side = boundary.decision(it.vector) >= 0.0 ? 1 : -1;
                pts.push_back({it.term, it.group, proj.coords[i], side});
            }
            r.files["embeddings/" + name + ".jsonl"] = dump_embeddings(set);
            r.files["figures/" + name + ".svg"] = render_svg(pts, groups, name + " (" + std::string(to_string(source)) + ")");
            clusters_md += clusters_markdown(name, groups) + "\n";
            sets.push_back({{"name", name},
                            {"n", n},
                            {"seed", seed},
                            {"perplexity", opt.perplexity},
                            {"k", k},
                            {"coordinates", to_json(proj)},
                            {"groups", to_json(groups)}});
        };
        analyse("gendered", gendered, true);
        analyse("professions", professions_set, false);
        analyse("emotions", emotions_set, false);
        r.report["sets"] = sets;
        r.files["figures/neighbour_groups.md"] = clusters_md;
        r.summary = {{"separation_accuracy", boundary.separation_accuracy}};
    }

    const RunConfig& cfg_;
    ScoreCache& cache_;
    ScorerBackend* backend_;
    ScorerEndpoint ep_;
    std::mutex mu_;
    std::mutex rec_mu_;
    std::optional<std::vector<GenderTermPair>> pairs_;
    std::optional<Recognition> recognition_;
};

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline nlohmann::json error_json(Suite s, const std::exception_ptr& ep) {
    nlohmann::json j = {{"suite", to_string(s)}};
    try {
        std::rethrow_exception(ep);
    } catch (const MissingScoresError& e) {
        j["kind"] = "missing_scores";
        j["message"] = e.what();
        j["missing_ids"] = e.ids();
    } catch (const ValidationError& e) {
        j["kind"] = "validation";
        j["message"] = e.what();
    } catch (const ParseError& e) {
        j["kind"] = "parse";
        j["message"] = e.what();
    } catch (const ContractError& e) {
        j["kind"] = "contract";
        j["message"] = e.what();
    } catch (const TransportError& e) {
        j["kind"] = "transport";
        j["message"] = e.what();
        j["request_id"] = e.request_id();
    } catch (const std::exception& e) {
        j["kind"] = "internal";
        j["message"] = e.what();
    }
    return j;
}

}  // namespace detail

// Summary as text: one row, metric columns grouped by suite.
inline TextTable summary_table(const nlohmann::json& summary) {
    TextTable t;
    t.header.push_back("scorer");
    std::vector<std::string> row{summary.at("label").get<std::string>()};
    for (const auto& s : summary.at("suites")) {
        const auto name = s.at("suite").get<std::string>();
        for (const auto& m : s.at("metrics")) {
            t.header.push_back(name + "." + m.at("name").get<std::string>());
            row.push_back(format_fixed(m.at("value").get<double>()));
        }
    }
    t.rows.push_back(std::move(row));
    return t;
}

inline RunOutcome run(const RunConfig& config, ScorerBackend* backend = nullptr) {
    validate(config);
    std::unique_ptr<ScorerBackend> owned;
    if (config.endpoint.transport == Transport::wire && !backend) {
        owned = std::make_unique<HttpBackend>(config.endpoint.address, config.endpoint.auth_token);
        backend = owned.get();
    }
    ScoreCache cache(config.endpoint.cache_path);
    detail::Runner runner(config, cache, backend);

    std::vector<std::optional<detail::SuiteResult>> results(config.suites.size());
    std::vector<std::exception_ptr> failures(config.suites.size());
    auto one = [&](std::size_t i) {
        try {
            results[i] = runner.run(config.suites[i]);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };
    if (config.parallel_suites) {
        std::vector<std::future<void>> jobs;
        for (std::size_t i = 0; i < config.suites.size(); ++i) jobs.push_back(std::async(std::launch::async, one, i));
        for (auto& j : jobs) j.get();
    } else {
        for (std::size_t i = 0; i < config.suites.size(); ++i) one(i);
    }

    const auto& out = config.output_dir;
    RunOutcome outcome;
    nlohmann::json suites = nlohmann::json::array();
    nlohmann::json scoring = nlohmann::json::object();
    nlohmann::json batteries = nlohmann::json::object();
    std::set<std::string> fingerprints;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (failures[i]) {
            outcome.errors.push_back(detail::error_json(config.suites[i], failures[i]));
            continue;
        }
        const auto& r = *results[i];
        const std::string name(to_string(r.suite));
        write_file(out / "reports" / (name + ".json"), detail::dump(r.report));
        for (const auto& [rel, contents] : r.files) write_file(out / rel, contents);
        nlohmann::json metrics = nlohmann::json::array();
        for (const auto& [k, v] : r.summary) metrics.push_back({{"name", k}, {"value", v}});
        suites.push_back({{"suite", name}, {"batteries", r.batteries}, {"metrics", metrics}});
        scoring[name] = r.scoring;
        batteries[name] = r.batteries;
        if (!r.fingerprint.empty()) fingerprints.insert(r.fingerprint);
    }

    std::string fingerprint;
    for (const auto& f : fingerprints) fingerprint += (fingerprint.empty() ? "" : ",") + f;
    nlohmann::json summary = {{"label", config.label.empty() ? fingerprint : config.label},
                              {"fingerprint", fingerprint},
                              {"strategy", to_string(config.strategy)},
                              {"flags", decision_flags(config)},
                              {"suites", suites}};
    write_file(out / "summary.json", detail::dump(summary));
    const auto table = summary_table(summary);
    write_file(out / "summary.csv", to_csv(table));
    write_file(out / "summary.md", to_markdown(table));

    nlohmann::json inputs = nlohmann::json::object();
    auto checksum = [&](const std::filesystem::path& p) {
        if (!p.empty() && std::filesystem::exists(p)) inputs[p.string()] = file_checksum(p);
    };
    const auto& P = config.paths;
    for (const auto* p : {&P.stereoset, &P.gender_pairs, &P.professions, &P.emotion_states, &P.emotion_situations})
        checksum(*p);
    nlohmann::json glue_paths = nlohmann::json::object();
    for (const auto& [task, p] : P.glue) {
        checksum(p);
        glue_paths[std::string(to_string(task))] = p.string();
    }
    nlohmann::json suite_names = nlohmann::json::array();
    for (Suite s : config.suites) suite_names.push_back(to_string(s));
    const auto& ep = config.endpoint;
    nlohmann::json manifest = {
        {"config",
         {{"suites", suite_names},
          {"strategy", to_string(config.strategy)},
          {"flags", decision_flags(config)},
          {"label", config.label},
          {"cluster_k", config.cluster_k},
          {"endpoint",
           {{"transport", ep.transport == Transport::wire ? "wire" : "cache"},
            {"address", ep.address},
            {"cache", ep.cache_path.string()},
            {"fingerprint", ep.fingerprint},
            {"batch_size", ep.batch_size},
            {"concurrency", ep.concurrency}}},
          {"paths",
           {{"stereoset", P.stereoset.string()},
            {"gender_pairs", P.gender_pairs.string()},
            {"professions", P.professions.string()},
            {"emotion_states", P.emotion_states.string()},
            {"emotion_situations", P.emotion_situations.string()},
            {"glue", glue_paths}}}}},
        {"inputs", inputs},
        {"fingerprint", fingerprint},
        {"batteries", batteries},
        {"scoring", scoring}};
    write_file(out / "manifest.json", detail::dump(manifest));

    const auto stale = out / "error_report.json";
    if (!outcome.errors.empty()) {
        write_file(stale, detail::dump(nlohmann::json{{"errors", outcome.errors}}));
        outcome.exit_code = 1;
    } else if (std::filesystem::exists(stale)) {
        std::filesystem::remove(stale);
    }
    outcome.summary = std::move(summary);
    return outcome;
}

// ---------------------------------------------------------------------------
// Comparison

struct CompareRow {
    std::string suite;
    std::string metric;
    std::vector<double> values;  // one per bundle
    std::vector<double> deltas;  // first minus each other bundle
};

struct Comparison {
    std::vector<std::string> labels;
    std::vector<CompareRow> rows;
};

inline nlohmann::json load_summary(const std::filesystem::path& bundle) {
    const auto path = std::filesystem::is_directory(bundle) ? bundle / "summary.json" : bundle;
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bundle summary " + path.string() + ": " + e.what());
    }
}

// Bundles must cover the same suites. Differing decision flags or battery
// contents make deltas meaningless; they are refused unless `force`.
inline Comparison compare(const std::vector<nlohmann::json>& summaries, bool force = false) {
    if (summaries.size() < 2) throw ValidationError("compare needs at least two bundles");
    auto suite_map = [](const nlohmann::json& s) {
        std::map<std::string, nlohmann::json> m;
        for (const auto& x : s.at("suites")) m[x.at("suite").get<std::string>()] = x;
        return m;
    };
    Comparison c;
    const auto first = suite_map(summaries[0]);
    std::vector<std::map<std::string, nlohmann::json>> maps;
    for (const auto& s : summaries) {
        c.labels.push_back(s.at("label").get<std::string>());
        maps.push_back(suite_map(s));
        std::set<std::string> a, b;
        for (const auto& [k, _] : first) a.insert(k);
        for (const auto& [k, _] : maps.back()) b.insert(k);
        if (a != b) {
            std::string msg = "bundle '" + c.labels.back() + "' covers different suites:";
            for (const auto& k : a)
                if (!b.count(k)) msg += " missing " + k;
            for (const auto& k : b)
                if (!a.count(k)) msg += " extra " + k;
            throw ValidationError(msg);
        }
        if (force) continue;
        if (s.at("flags") != summaries[0].at("flags"))
            throw ValidationError("bundle '" + c.labels.back() + "' was produced with different decision flags (" +
                                  s.at("flags").dump() + " vs " + summaries[0].at("flags").dump() +
                                  "); pass force to compare anyway");
        for (const auto& [k, v] : maps.back())
            if (v.at("batteries") != first.at(k).at("batteries"))
                throw ValidationError("bundle '" + c.labels.back() + "' scored different batteries for suite " + k +
                                      "; pass force to compare anyway");
    }
    for (const auto& x : summaries[0].at("suites")) {
        const auto suite = x.at("suite").get<std::string>();
        for (const auto& m : x.at("metrics")) {
            CompareRow row{suite, m.at("name").get<std::string>(), {}, {}};
            for (const auto& mp : maps) {
                const auto& ms = mp.at(suite).at("metrics");
                const auto it = std::find_if(ms.begin(), ms.end(), [&](const nlohmann::json& e) {
                    return e.at("name") == row.metric;
                });
                if (it == ms.end())
                    throw ValidationError("metric " + suite + "." + row.metric + " missing from a bundle");
                row.values.push_back(it->at("value").get<double>());
            }
            for (std::size_t i = 1; i < row.values.size(); ++i) row.deltas.push_back(row.values[0] - row.values[i]);
            c.rows.push_back(std::move(row));
        }
    }
    return c;
}

inline TextTable to_table(const Comparison& c) {
    TextTable t;
    t.header = {"suite", "metric"};
    for (const auto& l : c.labels) t.header.push_back(l);
    for (std::size_t i = 1; i < c.labels.size(); ++i) t.header.push_back("delta vs " + c.labels[i]);
    for (const auto& r : c.rows) {
        std::vector<std::string> cells{r.suite, r.metric};
        for (double v : r.values) cells.push_back(format_fixed(v));
        for (double d : r.deltas) cells.push_back(format_signed(d));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline nlohmann::json to_json(const Comparison& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : c.rows) rows.push_back({{"suite", r.suite}, {"metric", r.metric}, {"values", r.values}, {"deltas", r.deltas}});
    return {{"labels", c.labels}, {"rows", rows}};
}

}  // namespace entailfair
