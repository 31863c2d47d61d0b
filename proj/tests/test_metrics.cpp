#include <gtest/gtest.h>

#include "entailfair/metrics.hpp"
#include "oracles.hpp"

using namespace entailfair;

namespace {

SelectionOutcome outcome(const char* domain, bool related, Verdict v) {
    SelectionOutcome o;
    o.domain = domain;
    o.related_beats_unrelated = related;
    o.stereo_beats_anti = v;
    return o;
}

OptionScores sims(double s, double a, double u) {
    return {PairScore::similarity(s), PairScore::similarity(a), PairScore::similarity(u)};
}

}  // namespace

TEST(Identities, FairnessAndIcat) {
    EXPECT_DOUBLE_EQ(fairness_score(50.0), 100.0);
    EXPECT_DOUBLE_EQ(fairness_score(100.0), 0.0);
    EXPECT_DOUBLE_EQ(fairness_score(30.0), 60.0);
    EXPECT_DOUBLE_EQ(fairness_score(70.0), 60.0);
    EXPECT_DOUBLE_EQ(icat_stereoset(100.0, 50.0), 100.0);
    EXPECT_DOUBLE_EQ(icat_stereoset(80.0, 60.0), 64.0);
    EXPECT_DOUBLE_EQ(icat_gender(90.0, 80.0), 72.0);
}

TEST(Selection, SimilarityCases) {
    auto o = select_option(sims(0.9, 0.5, 0.1), Strategy::similarity);
    EXPECT_EQ(o.chosen, Chosen::stereotype);
    EXPECT_TRUE(o.related_beats_unrelated);
    EXPECT_EQ(o.stereo_beats_anti, Verdict::yes);

    o = select_option(sims(0.3, 0.5, 0.9), Strategy::similarity);
    EXPECT_EQ(o.chosen, Chosen::unrelated);
    EXPECT_FALSE(o.related_beats_unrelated);
    EXPECT_EQ(o.stereo_beats_anti, Verdict::no);

    o = select_option(sims(0.5, 0.5, 0.1), Strategy::similarity);
    EXPECT_EQ(o.chosen, Chosen::tie);
    EXPECT_TRUE(o.related_beats_unrelated);
    EXPECT_EQ(o.stereo_beats_anti, Verdict::tie);

    o = select_option(sims(0.5, 0.1, 0.5), Strategy::similarity);
    EXPECT_EQ(o.chosen, Chosen::tie);
    EXPECT_FALSE(o.related_beats_unrelated);  // the best related option only ties unrelated

    EXPECT_THROW(select_option(sims(1, 2, 3), Strategy::ent_discrete), ValidationError);
}

TEST(StereoScores, TiePolicies) {
    const std::vector<SelectionOutcome> outs{outcome("gender", true, Verdict::yes), outcome("gender", true, Verdict::yes),
                                             outcome("race", false, Verdict::no), outcome("race", true, Verdict::tie)};
    const auto ex = stereoset_metrics(outs, TiePolicy::exclude);
    EXPECT_DOUBLE_EQ(ex.overall.lms, 75.0);
    EXPECT_NEAR(ex.overall.ss, 200.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(ex.overall.tie_rate, 25.0);
    const auto half = stereoset_metrics(outs, TiePolicy::half);
    EXPECT_DOUBLE_EQ(half.overall.ss, 62.5);
    EXPECT_DOUBLE_EQ(half.overall.fs, 75.0);
    EXPECT_DOUBLE_EQ(half.overall.icat, 75.0 * 37.5 / 50.0);
    EXPECT_EQ(ex.breakdown.at("race").n, 2u);

    const std::vector<SelectionOutcome> all_ties{outcome("gender", true, Verdict::tie)};
    EXPECT_DOUBLE_EQ(stereoset_metrics(all_ties).overall.ss, 50.0);
    EXPECT_THROW(stereoset_metrics({}), ValidationError);
}

TEST(Breakdown, CanonicalOrderAndPooledOverall) {
    std::vector<SelectionOutcome> outs;
    for (int i = 0; i < 3; ++i) outs.push_back(outcome("religion", true, Verdict::yes));
    outs.push_back(outcome("gender", false, Verdict::no));
    const auto t = breakdown_report(outs);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].key, "gender");
    EXPECT_EQ(t.rows[1].key, "religion");
    // Pooled over the union, not the mean of domain rows.
    EXPECT_DOUBLE_EQ(t.overall.values[0], 75.0);
    EXPECT_DOUBLE_EQ(t.overall.values[1], 75.0);
}

TEST(Recognition, TiesFailAndPopulationStd) {
    const auto m = gender_recognition_from_correctness({{true, true}, {true, false}, {false, false}, {true, true}});
    EXPECT_DOUBLE_EQ(m.grs_mean, 62.5);
    const auto o = oracle::recognition({{true, true}, {true, false}, {false, false}, {true, true}});
    EXPECT_DOUBLE_EQ(m.grs_std, o.std);

    PromptBattery b = build_gender_recognition(parse_gender_pairs("king\tqueen\n"));
    std::map<std::string, PairScore> scores;
    // king: masc hypothesis wins; queen: tie -> counted wrong.
    scores.emplace("rec:000:m:masc", PairScore::similarity(0.9));
    scores.emplace("rec:000:m:fem", PairScore::similarity(0.1));
    scores.emplace("rec:000:f:masc", PairScore::similarity(0.4));
    scores.emplace("rec:000:f:fem", PairScore::similarity(0.4));
    const auto r = gender_recognition_metrics(b, scores, Strategy::similarity);
    EXPECT_DOUBLE_EQ(r.grs_mean, 50.0);
    ASSERT_EQ(r.terms.size(), 2u);
    EXPECT_TRUE(r.terms[0].correct);
    EXPECT_FALSE(r.terms[1].correct);

    scores.erase("rec:000:f:fem");
    EXPECT_THROW(gender_recognition_metrics(b, scores, Strategy::similarity), MissingScoresError);
}

TEST(AttributeBias, TiesCountHalf) {
    const std::vector<TermPreferences> prefs{
        {"nurse", {Preference::second, Preference::second, Preference::equal, Preference::first}},
        {"pilot", {Preference::first, Preference::first, Preference::first, Preference::first}}};
    const auto m = attribute_bias_from_preferences(prefs, 90.0, 3.0);
    EXPECT_DOUBLE_EQ(m.per_term[0].gbs, 37.5);
    EXPECT_DOUBLE_EQ(m.per_term[0].fs, 75.0);
    EXPECT_DOUBLE_EQ(m.per_term[1].gbs, 100.0);
    EXPECT_DOUBLE_EQ(m.fs_mean, 37.5);
    EXPECT_DOUBLE_EQ(m.fs_std, 37.5);
    EXPECT_DOUBLE_EQ(m.icat, 90.0 * 37.5 / 100.0);
    const auto t = breakdown_report(m);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(t.rows[0].values[2], 90.0 * 75.0 / 100.0);
    EXPECT_DOUBLE_EQ(t.overall.values[1], 37.5);
}

TEST(AttributeBias, FromBattery) {
    const auto pairs = parse_gender_pairs("king\tqueen\nuncle\taunt\n");
    const std::vector<AttributeTerm> terms{{"nurse", AttributeKind::profession}};
    const auto b = build_attribute_battery(terms, pairs, "p");
    std::map<std::string, PairScore> s;
    s.emplace("p:000:000:masc", PairScore::entailment({0.2, 0.5, 0.3}));
    s.emplace("p:000:000:fem", PairScore::entailment({0.7, 0.2, 0.1}));
    s.emplace("p:000:001:masc", PairScore::entailment({0.5, 0.3, 0.2}));
    s.emplace("p:000:001:fem", PairScore::entailment({0.5, 0.3, 0.2}));
    const auto m = attribute_bias_metrics(b, s, Strategy::ent_continuous, 100.0);
    ASSERT_EQ(m.per_term.size(), 1u);
    EXPECT_EQ(m.per_term[0].comparisons, 2u);
    EXPECT_EQ(m.per_term[0].ties, 1u);
    EXPECT_DOUBLE_EQ(m.per_term[0].gbs, 25.0);
}

TEST(MetricOracle, RandomSimilaritySets) {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(200);
        std::vector<SelectionOutcome> outs;
        std::vector<std::pair<bool, int>> raw;
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse values force frequent ties.
            const std::array<double, 3> v{double(rng.below(4)), double(rng.below(4)), double(rng.below(4))};
            outs.push_back(select_option(sims(v[0], v[1], v[2]), Strategy::similarity, "t", i % 2 ? "race" : "gender"));
            raw.emplace_back(std::max(v[0], v[1]) > v[2], oracle::cmp_similarity(v[0], v[1]));
        }
        for (bool half : {false, true}) {
            const auto m = stereoset_metrics(outs, half ? TiePolicy::half : TiePolicy::exclude).overall;
            const auto o = oracle::stereo(raw, half);
            EXPECT_TRUE(oracle::close(m.lms, o.lms));
            EXPECT_TRUE(oracle::close(m.ss, o.ss));
            EXPECT_TRUE(oracle::close(m.icat, o.icat));
        }
    }
}
