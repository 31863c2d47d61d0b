#include <gtest/gtest.h>

#include <filesystem>

#include "entailfair/run.hpp"
#include "mock_scorer.hpp"

using namespace entailfair;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = ENTAILFAIR_FIXTURES;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("entailfair-run-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunConfig fixture_config(const fs::path& out, Strategy strategy = Strategy::ent_continuous) {
    RunConfig c;
    c.suites.assign(std::begin(kAllSuites), std::end(kAllSuites));
    if (strategy == Strategy::similarity) c.suites.erase(std::find(c.suites.begin(), c.suites.end(), Suite::glue));
    c.strategy = strategy;
    c.paths.stereoset = kFixtures / "stereoset_mini.json";
    c.paths.gender_pairs = kFixtures / "gender_pairs_small.tsv";
    c.paths.professions = kFixtures / "professions_small.txt";
    c.paths.emotion_states = kFixtures / "emotion_states_small.txt";
    c.paths.emotion_situations = kFixtures / "emotion_situations_small.txt";
    c.paths.glue = {{GlueTask::MNLI, kFixtures / "mnli.tsv"}, {GlueTask::RTE, kFixtures / "rte.tsv"},
                    {GlueTask::QNLI, kFixtures / "qnli.tsv"}, {GlueTask::QQP, kFixtures / "qqp.tsv"},
                    {GlueTask::SST2, kFixtures / "sst2.tsv"}};
    c.output_dir = out;
    c.seed = 0;
    c.endpoint.transport = Transport::wire;
    c.endpoint.address = "in-process";
    c.endpoint.cache_path = out / "scores.jsonl";
    c.label = "mock";
    c.cluster_k = 2;
    return c;
}

std::map<std::string, std::string> bundle_files(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).string();
        if (rel == "manifest.json" || rel == "scores.jsonl") continue;
        out[rel] = read_file(e.path());
    }
    return out;
}

nlohmann::json summary_with(const std::string& label, double icat, nlohmann::json flags = {{"tie_policy", "exclude"}}) {
    return {{"label", label},
            {"flags", flags},
            {"suites",
             {{{"suite", "profession"},
               {"batteries", {"profession@x"}},
               {"metrics", {{{"name", "icat"}, {"value", icat}}}}}}}};
}

}  // namespace

TEST(RunConfig, ValidationBeforeScoring) {
    TempDir tmp;
    auto c = fixture_config(tmp.path);
    c.suites = {Suite::profession};
    c.paths.gender_pairs.clear();
    auto backend = mock::hashed_backend();
    EXPECT_THROW(run(c, backend.get()), ValidationError);
    EXPECT_EQ(backend->calls(), 0u);

    c = fixture_config(tmp.path);
    c.seed.reset();
    EXPECT_THROW(validate(c), ValidationError);
    c = fixture_config(tmp.path, Strategy::similarity);
    c.suites.push_back(Suite::glue);
    const auto problems = config_problems(c);
    ASSERT_EQ(problems.size(), 1u);
    EXPECT_NE(problems[0].find("entailment"), std::string::npos);
    c = fixture_config(tmp.path);
    c.endpoint.transport = Transport::cache;
    c.endpoint.cache_path = tmp.path / "absent.jsonl";
    EXPECT_THROW(validate(c), ValidationError);
}

TEST(Run, FullFixtureRunThenCacheReplay) {
    TempDir tmp;
    const auto first = tmp.path / "first";
    auto c = fixture_config(first);
    auto backend = mock::hashed_backend();
    const auto out = run(c, backend.get());
    ASSERT_EQ(out.exit_code, 0) << out.errors.dump(2);
    for (const char* f : {"summary.json", "summary.csv", "summary.md", "manifest.json", "reports/stereoset_inter.json",
                          "reports/glue.json", "figures/gendered.svg", "embeddings/gendered.jsonl",
                          "batteries/gender_recognition.jsonl", "outcomes/stereoset_intra.jsonl"})
        EXPECT_TRUE(fs::exists(first / f)) << f;

    const auto report = nlohmann::json::parse(read_file(first / "reports/stereoset_intra.json"));
    EXPECT_EQ(report.at("counts").at("tests"), 3);
    EXPECT_EQ(report.at("rejected").size(), 2u);
    EXPECT_EQ(report.at("metadata").at("fingerprint"), "mock-v1");
    const auto prof = nlohmann::json::parse(read_file(first / "reports/profession.json"));
    EXPECT_EQ(prof.at("counts").at("comparisons"), 30);  // 6 professions x 5 pairs

    // Replay from the cache into a fresh directory, serially and in parallel.
    for (bool parallel : {false, true}) {
        const auto dir = tmp.path / (parallel ? "replay-par" : "replay");
        auto r = fixture_config(dir);
        r.endpoint.transport = Transport::cache;
        r.endpoint.cache_path = c.endpoint.cache_path;
        r.parallel_suites = parallel;
        const auto again = run(r, nullptr);
        ASSERT_EQ(again.exit_code, 0) << again.errors.dump(2);
        EXPECT_EQ(bundle_files(dir), bundle_files(first));
    }
}

TEST(Run, MissingScoresKeepPartialResults) {
    TempDir tmp;
    auto c = fixture_config(tmp.path / "a");
    c.suites = {Suite::gender_recognition};
    auto backend = mock::hashed_backend();
    ASSERT_EQ(run(c, backend.get()).exit_code, 0);

    auto r = fixture_config(tmp.path / "b");
    r.suites = {Suite::gender_recognition, Suite::stereoset_inter};
    r.endpoint.transport = Transport::cache;
    r.endpoint.cache_path = c.endpoint.cache_path;
    const auto out = run(r, nullptr);
    EXPECT_EQ(out.exit_code, 1);
    ASSERT_EQ(out.errors.size(), 1u);
    EXPECT_EQ(out.errors[0].at("suite"), "stereoset_inter");
    EXPECT_EQ(out.errors[0].at("kind"), "missing_scores");
    EXPECT_EQ(out.errors[0].at("missing_ids").size(), 12u);
    EXPECT_TRUE(fs::exists(tmp.path / "b" / "reports/gender_recognition.json"));
    EXPECT_TRUE(fs::exists(tmp.path / "b" / "error_report.json"));
}

TEST(Compare, DeltasAndRefusals) {
    const auto c = compare({summary_with("ent", 95.10), summary_with("sim", 59.10)});
    ASSERT_EQ(c.rows.size(), 1u);
    EXPECT_EQ(format_signed(c.rows[0].deltas[0]), "+36.00");
    const auto table = to_markdown(to_table(c));
    EXPECT_NE(table.find("+36.00"), std::string::npos);

    const auto same = compare({summary_with("a", 70.0), summary_with("a", 70.0)});
    EXPECT_EQ(same.rows[0].deltas[0], 0.0);

    auto missing = summary_with("b", 1.0);
    missing["suites"] = nlohmann::json::array();
    EXPECT_THROW(compare({summary_with("a", 1.0), missing}), ValidationError);
    EXPECT_THROW(compare({summary_with("a", 1.0), missing}, true), ValidationError);

    const auto other_flags = summary_with("h", 1.0, {{"tie_policy", "half"}});
    EXPECT_THROW(compare({summary_with("a", 1.0), other_flags}), ValidationError);
    EXPECT_NO_THROW(compare({summary_with("a", 1.0), other_flags}, true));
    EXPECT_THROW(compare({summary_with("a", 1.0)}), ValidationError);
}

TEST(Compare, SimilarityAgainstEntailmentBundles) {
    TempDir tmp;
    auto ent = fixture_config(tmp.path / "ent");
    ent.suites = {Suite::stereoset_inter, Suite::profession};
    auto sim = fixture_config(tmp.path / "sim", Strategy::similarity);
    sim.suites = ent.suites;
    auto backend = mock::hashed_backend();
    ASSERT_EQ(run(ent, backend.get()).exit_code, 0);
    ASSERT_EQ(run(sim, backend.get()).exit_code, 0);
    const auto c = compare({load_summary(tmp.path / "ent"), load_summary(tmp.path / "sim")});
    EXPECT_EQ(c.rows.size(), 4u + 5u);
    for (const auto& r : c.rows) EXPECT_DOUBLE_EQ(r.deltas[0], r.values[0] - r.values[1]);
}
