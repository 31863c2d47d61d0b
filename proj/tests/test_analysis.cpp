#include <gtest/gtest.h>

#include <cmath>

#include "entailfair/analysis.hpp"

using namespace entailfair;

namespace {

EmbeddingSet gaussian_clusters(std::size_t per_class, std::size_t d, double separation, std::uint64_t seed) {
    SplitMix64 rng(seed);
    EmbeddingSet set;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool masc = i < per_class;
        EmbeddingItem it;
        it.term = (masc ? "m" : "f") + std::to_string(i);
        it.group = masc ? TermGroup::masculine : TermGroup::feminine;
        for (std::size_t k = 0; k < d; ++k) it.vector.push_back(rng.normal() + (k == 0 ? (masc ? separation : -separation) : 0.0));
        set.items.push_back(std::move(it));
    }
    return set;
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

std::vector<std::vector<double>> random_orthogonal(std::size_t d, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::vector<double>> q;
    while (q.size() < d) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        for (const auto& u : q) {
            double dot = 0;
            for (std::size_t k = 0; k < d; ++k) dot += v[k] * u[k];
            for (std::size_t k = 0; k < d; ++k) v[k] -= dot * u[k];
        }
        double norm = 0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        q.push_back(v);
    }
    return q;
}

}  // namespace

TEST(Projection, ShapeDeterminismAndPreconditions) {
    const auto set = gaussian_clusters(71, 6, 0.5, 1);
    const auto a = project_2d(set, 0, 15.0);
    const auto b = project_2d(set, 0, 15.0);
    ASSERT_EQ(a.coords.size(), 142u);
    EXPECT_EQ(a.coords, b.coords);
    EXPECT_NE(project_2d(set, 1, 15.0).coords, a.coords);
    EXPECT_THROW(project_2d(set, 0, 47.0), ValidationError);  // (n-1)/3 = 47
    auto tiny = set;
    tiny.items.resize(3);
    EXPECT_THROW(project_2d(tiny, 0, 0.5), ValidationError);
    EXPECT_NO_THROW(a.at("m0"));
    EXPECT_THROW(a.at("nobody"), ValidationError);
}

TEST(Projection, SeparatedClustersStaySeparated) {
    const auto set = gaussian_clusters(30, 10, 8.0, 2);
    const auto p = project_2d(set, 3, 10.0);
    std::array<double, 2> c1{0, 0}, c2{0, 0};
    for (std::size_t i = 0; i < 60; ++i) {
        auto& c = i < 30 ? c1 : c2;
        c[0] += p.coords[i][0] / 30.0;
        c[1] += p.coords[i][1] / 30.0;
    }
    auto intra = [&](std::size_t lo) {
        double s = 0;
        std::size_t n = 0;
        for (std::size_t i = lo; i < lo + 30; ++i)
            for (std::size_t j = i + 1; j < lo + 30; ++j) s += dist(p.coords[i], p.coords[j]), ++n;
        return s / double(n);
    };
    const double between = dist(c1, c2);
    EXPECT_GT(between, intra(0));
    EXPECT_GT(between, intra(30));
}

TEST(Boundary, SeparableOverlapAndSingleClass) {
    EXPECT_DOUBLE_EQ(fit_linear_boundary(gaussian_clusters(40, 5, 10.0, 4)).separation_accuracy, 100.0);

    EmbeddingSet same;
    for (int i = 0; i < 10; ++i)
        same.items.push_back({"t" + std::to_string(i), i % 2 ? TermGroup::feminine : TermGroup::masculine, {1.0, 2.0, 3.0}});
    EXPECT_DOUBLE_EQ(fit_linear_boundary(same).separation_accuracy, 50.0);

    auto one = gaussian_clusters(5, 3, 1.0, 5);
    for (auto& it : one.items) it.group = TermGroup::masculine;
    EXPECT_THROW(fit_linear_boundary(one), ValidationError);
}

TEST(Boundary, PermutedLabelsAverageNearChance) {
    const auto base = gaussian_clusters(71, 3, 0.0, 6);
    SplitMix64 rng(99);
    double total = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto set = base;
        for (std::size_t i = set.items.size() - 1; i > 0; --i)
            std::swap(set.items[i].group, set.items[rng.below(i + 1)].group);
        const auto r = fit_linear_boundary(set);
        EXPECT_GE(r.separation_accuracy, 0.0);
        EXPECT_LE(r.separation_accuracy, 100.0);
        total += r.separation_accuracy;
    }
    EXPECT_NEAR(total / 20.0, 50.0, 10.0);
}

TEST(Boundary, InvariantUnderOrthogonalTransform) {
    const auto set = gaussian_clusters(50, 6, 0.7, 8);
    const auto q = random_orthogonal(6, 9);
    auto rotated = set;
    for (auto& it : rotated.items) {
        std::vector<double> v(6, 0.0);
        for (std::size_t r = 0; r < 6; ++r)
            for (std::size_t k = 0; k < 6; ++k) v[r] += q[r][k] * it.vector[k];
        it.vector = v;
    }
    EXPECT_DOUBLE_EQ(fit_linear_boundary(set).separation_accuracy, fit_linear_boundary(rotated).separation_accuracy);
}

TEST(Clusters, TightGroupsFound) {
    Projection p;
    const std::array<std::array<double, 2>, 6> pts{{{0, 0}, {0.1, 0}, {0, 0.1}, {10, 10}, {10.2, 10}, {10, 10.2}}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        p.terms.push_back("p" + std::to_string(i));
        p.coords.push_back(pts[i]);
    }
    const auto groups = neighbor_clusters(p, 2);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0].terms, (std::vector<std::string>{"p0", "p1", "p2"}));
    EXPECT_EQ(groups[1].terms, (std::vector<std::string>{"p3", "p4", "p5"}));
    EXPECT_LT(groups[0].cohesion, groups[1].cohesion);
    EXPECT_THROW(neighbor_clusters(p, 6), ValidationError);
    EXPECT_THROW(neighbor_clusters(p, 0), ValidationError);
}

TEST(Clusters, RandomPointsBoundedByMutuality) {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        Projection p;
        for (int i = 0; i < 80; ++i) {
            p.terms.push_back("t" + std::to_string(i));
            p.coords.push_back({rng.uniform(), rng.uniform()});
        }
        for (std::size_t k : {1u, 3u, 5u})
            for (const auto& g : neighbor_clusters(p, k)) {
                EXPECT_GE(g.terms.size(), 2u);
                EXPECT_LE(g.terms.size(), k + 1);
            }
    }
}

TEST(EmbeddingIo, RoundTripAndValidation) {
    const auto set = gaussian_clusters(3, 4, 1.0, 12);
    const auto back = parse_embeddings(dump_embeddings(set), EmbeddingSource::sentence_embedding);
    ASSERT_EQ(back.items.size(), set.items.size());
    EXPECT_EQ(back.items[2].vector, set.items[2].vector);
    EXPECT_THROW(parse_embeddings("{\"term\":\"a\",\"group\":\"x\",\"vector\":[1,2]}\n", EmbeddingSource::sentence_embedding),
                 ParseError);
    EmbeddingSet bad;
    bad.items = {{"a", TermGroup::attribute, {1, 2}}, {"a", TermGroup::attribute, {3, 4}}};
    EXPECT_THROW(bad.validate(), ValidationError);
    bad.items[1].term = "b";
    bad.items[1].vector.push_back(5);
    EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Figure, SvgIsDeterministic) {
    const auto set = gaussian_clusters(10, 4, 2.0, 13);
    const auto proj = project_2d(set, 0, 5.0);
    const auto boundary = fit_linear_boundary(set);
    std::vector<PlotPoint> pts;
    for (std::size_t i = 0; i < set.items.size(); ++i)
        pts.push_back({set.items[i].term, set.items[i].group, proj.coords[i],
                       boundary.decision(set.items[i].vector) >= 0 ? 1 : -1});
    const auto groups = neighbor_clusters(proj, 2);
    const auto a = render_svg(pts, groups, "test <plot>");
    EXPECT_EQ(a, render_svg(pts, groups, "test <plot>"));
    EXPECT_NE(a.find("<svg"), std::string::npos);
    EXPECT_NE(a.find("test &lt;plot&gt;"), std::string::npos);
    EXPECT_NE(a.find("stroke-dasharray"), std::string::npos);
}
