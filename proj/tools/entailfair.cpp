// entailfair command line: run suites, compare bundles, dump batteries and
// evaluate single zero-shot tasks.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entailfair/run.hpp"

namespace fs = std::filesystem;
using namespace entailfair;

namespace {

#ifndef ENTAILFAIR_DATA_DIR
#define ENTAILFAIR_DATA_DIR "data"
#endif

const fs::path kData = ENTAILFAIR_DATA_DIR;

struct ScorerFlags {
    std::string endpoint;
    std::string cache;
    std::string fingerprint;
    std::string strategy = "ent-continuous";
    std::string similarity = "cosine";
    std::size_t batch_size = 32;
    std::size_t concurrency = 1;
};

struct PathFlags {
    std::string stereoset = (kData / "stereoset" / "dev.jsonl").string();
    std::string gender_pairs = (kData / "vocab" / "gender_pairs.tsv").string();
    std::string professions = (kData / "vocab" / "professions.txt").string();
    std::string emotion_states = (kData / "vocab" / "emotion_states.txt").string();
    std::string emotion_situations = (kData / "vocab" / "emotion_situations.txt").string();
    std::vector<std::string> glue;  // TASK=PATH
};

void add_scorer_flags(CLI::App* app, ScorerFlags& f) {
    app->add_option("--endpoint", f.endpoint, "Scorer base URL (wire transport)");
    app->add_option("--cache", f.cache, "Score cache file; alone it selects offline cache transport");
    app->add_option("--fingerprint", f.fingerprint, "Pin the backend fingerprint");
    app->add_option("--strategy", f.strategy, "Scoring strategy")
        ->check(CLI::IsMember({"similarity", "ent-continuous", "ent-discrete"}));
    app->add_option("--similarity", f.similarity, "Similarity measure")->check(CLI::IsMember({"cosine", "dot"}));
    app->add_option("--batch-size", f.batch_size, "Items per scoring request")->check(CLI::PositiveNumber);
    app->add_option("--concurrency", f.concurrency, "Parallel scoring requests")->check(CLI::PositiveNumber);
}

void add_path_flags(CLI::App* app, PathFlags& p) {
    app->add_option("--stereoset", p.stereoset, "StereoSet file (published JSON or flat JSON Lines)");
    app->add_option("--gender-pairs", p.gender_pairs, "Gender noun pairs (TSV)");
    app->add_option("--professions", p.professions, "Profession list");
    app->add_option("--emotion-states", p.emotion_states, "Emotion state list");
    app->add_option("--emotion-situations", p.emotion_situations, "Emotion situation list");
    app->add_option("--glue", p.glue, "GLUE dataset as TASK=PATH (repeatable)");
}

const char* env(const char* name) {
    const char* v = std::getenv(name);
    return v && *v ? v : nullptr;
}

ScorerEndpoint make_endpoint(const ScorerFlags& f, const fs::path& out_dir) {
    ScorerEndpoint ep;
    ep.batch_size = f.batch_size;
    ep.concurrency = f.concurrency;
    ep.fingerprint = f.fingerprint;
    ep.measure = *parse_similarity_measure(f.similarity);
    if (const char* tok = env("ENTAILFAIR_TOKEN")) ep.auth_token = tok;
    fs::path cache_dir = out_dir;
    if (const char* dir = env("ENTAILFAIR_CACHE_DIR")) cache_dir = dir;
    if (!f.endpoint.empty()) {
        ep.transport = Transport::wire;
        ep.address = f.endpoint;
        ep.cache_path = f.cache.empty() ? cache_dir / "scores.jsonl" : fs::path(f.cache);
    } else if (!f.cache.empty()) {
        ep.transport = Transport::cache;
        ep.cache_path = f.cache;
    } else {
        throw ValidationError("either --endpoint or --cache is required");
    }
    return ep;
}

DataPaths make_paths(const PathFlags& p) {
    DataPaths d{p.stereoset, p.gender_pairs, p.professions, p.emotion_states, p.emotion_situations, {}};
    for (const auto& spec : p.glue) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ValidationError("--glue expects TASK=PATH, got " + spec);
        const auto task = parse_glue_task(spec.substr(0, eq));
        if (!task) throw ValidationError("unknown GLUE task: " + spec.substr(0, eq));
        d.glue[*task] = spec.substr(eq + 1);
    }
    return d;
}

std::string render(const TextTable& t, const nlohmann::json& j, const std::string& format) {
    if (format == "csv") return to_csv(t);
    if (format == "md") return to_markdown(t);
    return j.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stereotype-bias evaluation harness for sentence-pair scorers"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "Run evaluation suites and write a report bundle");
    std::vector<std::string> suites;
    ScorerFlags scorer;
    PathFlags paths;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string tie_policy = "exclude";
    std::string format = "md";
    std::string binary_neutral = "negative";
    std::string sst2_rule = "ignore";
    std::string label;
    std::size_t cluster_k = 3;
    bool parallel = false;
    run_cmd->add_option("--suite", suites, "Suite to run (repeatable)")
        ->required()
        ->check(CLI::IsMember({"stereoset_intra", "stereoset_inter", "gender_recognition", "profession", "emotion",
                               "glue", "embedding_analysis"}));
    add_scorer_flags(run_cmd, scorer);
    add_path_flags(run_cmd, paths);
    run_cmd->add_option("--out", out_dir, "Output directory")->required();
    run_cmd->add_option("--seed", seed, "Run seed (required for embedding_analysis)");
    run_cmd->add_option("--tie-policy", tie_policy, "How ties enter SS")->check(CLI::IsMember({"exclude", "half"}));
    run_cmd->add_option("--binary-neutral", binary_neutral, "Neutral mass in binary GLUE tasks")
        ->check(CLI::IsMember({"negative", "positive"}));
    run_cmd->add_option("--sst2-rule", sst2_rule, "SST-2 decision rule")->check(CLI::IsMember({"ignore", "fold"}));
    run_cmd->add_option("--format", format, "Summary format printed to stdout")->check(CLI::IsMember({"json", "csv", "md"}));
    run_cmd->add_option("--label", label, "Scorer name in summary tables");
    run_cmd->add_option("--cluster-k", cluster_k, "Neighbours for projection groups")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--parallel-suites", parallel, "Run suites concurrently");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Metric deltas between report bundles (first minus others)");
    std::vector<std::string> bundles;
    bool force = false;
    std::string cmp_format = "md";
    cmp_cmd->add_option("bundles", bundles, "Bundle directories or summary.json files")->required()->expected(2, -1);
    cmp_cmd->add_flag("--force", force, "Compare despite differing decision flags or batteries");
    cmp_cmd->add_option("--format", cmp_format, "Output format")->check(CLI::IsMember({"json", "csv", "md"}));

    // battery
    auto* bat_cmd = app.add_subcommand("battery", "Write prompt batteries without scoring");
    std::vector<std::string> bat_suites;
    PathFlags bat_paths;
    std::string bat_out;
    bat_cmd->add_option("--suite", bat_suites, "Suite (repeatable)")
        ->required()
        ->check(CLI::IsMember({"stereoset_intra", "stereoset_inter", "gender_recognition", "profession", "emotion",
                               "glue", "embedding_analysis"}));
    add_path_flags(bat_cmd, bat_paths);
    bat_cmd->add_option("--out", bat_out, "Output directory")->required();

    // zeroshot
    auto* zs_cmd = app.add_subcommand("zeroshot", "Zero-shot accuracy on one GLUE task");
    std::string zs_task;
    std::string zs_data;
    ScorerFlags zs_scorer;
    std::string zs_out = ".";
    std::string zs_neutral = "negative";
    std::string zs_sst2 = "ignore";
    zs_cmd->add_option("task", zs_task, "Task")->required()->check(CLI::IsMember({"MNLI", "RTE", "QNLI", "QQP", "SST2"}));
    zs_cmd->add_option("--data", zs_data, "Dataset (TSV or JSON Lines)")->required();
    add_scorer_flags(zs_cmd, zs_scorer);
    zs_cmd->add_option("--out", zs_out, "Directory for the default score cache");
    zs_cmd->add_option("--binary-neutral", zs_neutral)->check(CLI::IsMember({"negative", "positive"}));
    zs_cmd->add_option("--sst2-rule", zs_sst2)->check(CLI::IsMember({"ignore", "fold"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            RunConfig cfg;
            for (const auto& s : suites) cfg.suites.push_back(*parse_suite(s));
            cfg.output_dir = out_dir;
            cfg.endpoint = make_endpoint(scorer, cfg.output_dir);
            cfg.strategy = *parse_strategy(scorer.strategy);
            cfg.paths = make_paths(paths);
            cfg.seed = seed;
            cfg.tie_policy = *parse_tie_policy(tie_policy);
            cfg.label_mapping.binary_neutral = binary_neutral == "positive" ? NeutralMapping::positive : NeutralMapping::negative;
            cfg.label_mapping.sst2 = sst2_rule == "fold" ? Sst2Rule::fold_neutral : Sst2Rule::ignore_neutral;
            cfg.label = label;
            cfg.cluster_k = cluster_k;
            cfg.parallel_suites = parallel;
            const auto outcome = run(cfg);
            std::cout << render(summary_table(outcome.summary), outcome.summary, format);
            for (const auto& e : outcome.errors)
                std::cerr << "error: " << e.at("suite").get<std::string>() << ": " << e.at("message").get<std::string>() << "\n";
            return outcome.exit_code;
        }
        if (*cmp_cmd) {
            std::vector<nlohmann::json> summaries;
            for (const auto& b : bundles) summaries.push_back(load_summary(b));
            const auto c = compare(summaries, force);
            std::cout << render(to_table(c), to_json(c), cmp_format);
            return 0;
        }
        if (*bat_cmd) {
            const auto p = make_paths(bat_paths);
            const fs::path out = bat_out;
            for (const auto& name : bat_suites) {
                const Suite s = *parse_suite(name);
                std::vector<PromptBattery> batteries;
                if (s == Suite::stereoset_intra || s == Suite::stereoset_inter) {
                    const auto sec = s == Suite::stereoset_intra ? Section::intra : Section::inter;
                    const auto load = load_stereoset(p.stereoset, sec);
                    batteries.push_back(build_stereoset_battery(load.tests, name).battery);
                } else if (s == Suite::glue) {
                    for (const auto& [task, path] : p.glue) {
                        const auto& t = task_template(task);
                        batteries.push_back(build_task_battery(t, load_glue_dataset(path, t)));
                    }
                } else {
                    const auto pairs = load_gender_pairs(p.gender_pairs);
                    auto prof = load_attribute_terms(p.professions, AttributeKind::profession);
                    auto emo = load_attribute_terms(p.emotion_states, AttributeKind::emotion_state);
                    const auto sit = load_attribute_terms(p.emotion_situations, AttributeKind::emotion_situation);
                    emo.insert(emo.end(), sit.begin(), sit.end());
                    if (s == Suite::gender_recognition) batteries.push_back(build_gender_recognition(pairs));
                    else if (s == Suite::profession) batteries.push_back(build_attribute_battery(prof, pairs, "profession"));
                    else if (s == Suite::emotion) batteries.push_back(build_attribute_battery(emo, pairs, "emotion"));
                    else {
                        prof.insert(prof.end(), emo.begin(), emo.end());
                        batteries.push_back(build_embedding_battery(pairs, prof, "embedding"));
                    }
                }
                for (const auto& b : batteries) {
                    write_file(out / (b.name + ".jsonl"), battery_manifest(b));
                    std::cout << b.cache_id() << "\t" << b.pairs.size() << " pairs\n";
                }
            }
            return 0;
        }
        if (*zs_cmd) {
            const auto task = *parse_glue_task(zs_task);
            const auto ep = make_endpoint(zs_scorer, zs_out);
            LabelMapping mapping;
            mapping.binary_neutral = zs_neutral == "positive" ? NeutralMapping::positive : NeutralMapping::negative;
            mapping.sst2 = zs_sst2 == "fold" ? Sst2Rule::fold_neutral : Sst2Rule::ignore_neutral;
            ScoreCache cache(ep.cache_path);
            std::unique_ptr<HttpBackend> backend;
            if (ep.transport == Transport::wire) backend = std::make_unique<HttpBackend>(ep.address, ep.auth_token);
            const auto report = evaluate_task(task, fs::path(zs_data), ep, cache, backend.get(), mapping);
            std::cout << to_json(report).dump(2) << "\n";
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
