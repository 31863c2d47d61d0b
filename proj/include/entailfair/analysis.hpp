#pragma once

// Prompt-embedding geometry: 2-D t-SNE projection, a linear max-margin
// gender probe in the full embedding space, and mutual-nearest-neighbour
// groups in the projection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "entailfair/error.hpp"
#include "entailfair/util.hpp"

namespace entailfair {

enum class TermGroup { masculine, feminine, attribute };
enum class EmbeddingSource { sentence_embedding, entailment_prompt_embedding };

inline std::string_view to_string(TermGroup g) {
    switch (g) {
        case TermGroup::masculine: return "masculine";
        case TermGroup::feminine: return "feminine";
        case TermGroup::attribute: return "attribute";
    }
    return "?";
}

inline std::string_view to_string(EmbeddingSource s) {
    return s == EmbeddingSource::sentence_embedding ? "sentence_embedding" : "entailment_prompt_embedding";
}

struct EmbeddingItem {
    std::string term;
    TermGroup group = TermGroup::attribute;
    std::vector<double> vector;
};

struct EmbeddingSet {
    std::vector<EmbeddingItem> items;
    EmbeddingSource source = EmbeddingSource::sentence_embedding;

    std::size_t dim() const { return items.empty() ? 0 : items.front().vector.size(); }

    void validate() const {
        const std::size_t d = dim();
        if (d < 2) throw ValidationError("embedding set: dimension must be at least 2");
        std::set<std::string> seen;
        for (const auto& it : items) {
            if (it.vector.size() != d)
                throw ValidationError("embedding set: term '" + it.term + "' has dimension " +
                                      std::to_string(it.vector.size()) + ", expected " + std::to_string(d));
            if (!seen.insert(it.term).second) throw ValidationError("embedding set: duplicate term '" + it.term + "'");
        }
    }

    EmbeddingSet restricted(std::initializer_list<TermGroup> groups) const {
        EmbeddingSet out;
        out.source = source;
        for (const auto& it : items)
            if (std::find(groups.begin(), groups.end(), it.group) != groups.end()) out.items.push_back(it);
        return out;
    }
};

// JSON Lines: {"term", "group", "vector"}.
inline std::string dump_embeddings(const EmbeddingSet& set) {
    std::string out;
    for (const auto& it : set.items) {
        out += nlohmann::json{{"term", it.term}, {"group", to_string(it.group)}, {"vector", it.vector}}.dump();
        out += '\n';
    }
    return out;
}

inline EmbeddingSet parse_embeddings(std::string_view text, EmbeddingSource source) {
    EmbeddingSet set;
    set.source = source;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        const std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            EmbeddingItem it;
            it.term = j.at("term").get<std::string>();
            const auto g = j.at("group").get<std::string>();
            if (g == "masculine") it.group = TermGroup::masculine;
            else if (g == "feminine") it.group = TermGroup::feminine;
            else if (g == "attribute") it.group = TermGroup::attribute;
            else throw ParseError("unknown group '" + g + "'");
            it.vector = j.at("vector").get<std::vector<double>>();
            set.items.push_back(std::move(it));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("embedding dump line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// t-SNE (exact gradient; the sets here have a few hundred points at most)

struct TsneOptions {
    double perplexity = 15.0;
    std::uint64_t seed = 0;
    int iterations = 1000;
    int exaggeration_iterations = 250;
    double exaggeration = 12.0;
    double learning_rate = 200.0;
};

inline double default_perplexity(std::size_t n) { return n >= 100 ? 15.0 : 10.0; }

struct Projection {
    std::vector<std::string> terms;
    std::vector<std::array<double, 2>> coords;

    const std::array<double, 2>& at(std::string_view term) const {
        for (std::size_t i = 0; i < terms.size(); ++i)
            if (terms[i] == term) return coords[i];
        throw ValidationError("projection has no term '" + std::string(term) + "'");
    }
};

namespace detail {

inline std::vector<double> squared_distances(const std::vector<std::vector<double>>& x) {
    const std::size_t n = x.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < x[i].size(); ++k) {
                const double diff = x[i][k] - x[j][k];
                s += diff * diff;
            }
            d[i * n + j] = d[j * n + i] = s;
        }
    return d;
}

// Symmetrized input affinities with each row's entropy matched to
// log(perplexity) by bisection on the Gaussian precision.
inline std::vector<double> input_affinities(const std::vector<double>& d2, std::size_t n, double perplexity) {
    const double target = std::log(perplexity);
    std::vector<double> p(n * n, 0.0);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 200; ++iter) {
            double sum = 0.0;
            double min_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) min_d = std::min(min_d, d2[i * n + j]);
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = j == i ? 0.0 : std::exp(-beta * (d2[i * n + j] - min_d));
                sum += row[j];
            }
            double entropy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                row[j] /= sum;
                if (row[j] > 1e-300) entropy -= row[j] * std::log(row[j]);
            }
            const double diff = entropy - target;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j];
    }
    const double norm = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = std::max((p[i * n + j] + p[j * n + i]) / norm, 1e-12);
            p[i * n + j] = p[j * n + i] = v;
        }
    for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 0.0;
    return p;
}

}  // namespace detail

inline Projection project_2d(const EmbeddingSet& set, const TsneOptions& opt) {
    set.validate();
    const std::size_t n = set.items.size();
    if (n < 4) throw ValidationError("project_2d: need at least 4 points, got " + std::to_string(n));
    if (!(opt.perplexity > 0.0) || opt.perplexity >= static_cast<double>(n - 1) / 3.0)
        throw ValidationError("project_2d: perplexity must be positive and below (n-1)/3 = " +
                              std::to_string(static_cast<double>(n - 1) / 3.0));

    std::vector<std::vector<double>> x;
    x.reserve(n);
    for (const auto& it : set.items) x.push_back(it.vector);
    const auto p = detail::input_affinities(detail::squared_distances(x), n, opt.perplexity);

    SplitMix64 rng(opt.seed);
    std::vector<double> y(2 * n), update(2 * n, 0.0), gains(2 * n, 1.0), grad(2 * n), num(n * n);
    for (auto& v : y) v = 1e-4 * rng.normal();

    for (int iter = 0; iter < opt.iterations; ++iter) {
        const bool early = iter < opt.exaggeration_iterations;
        const double exag = early ? opt.exaggeration : 1.0;
        const double momentum = early ? 0.5 : 0.8;

        double sum_num = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = y[2 * i] - y[2 * j];
                const double dy = y[2 * i + 1] - y[2 * j + 1];
                const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = num[j * n + i] = q;
                sum_num += 2.0 * q;
            }
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = num[i * n + j];
                const double mult = 4.0 * (exag * p[i * n + j] - q / sum_num) * q;
                grad[2 * i] += mult * (y[2 * i] - y[2 * j]);
                grad[2 * i + 1] += mult * (y[2 * i + 1] - y[2 * j + 1]);
            }
        for (std::size_t k = 0; k < 2 * n; ++k) {
            const bool same_sign = (grad[k] > 0.0) == (update[k] > 0.0);
            gains[k] = std::max(same_sign ? gains[k] * 0.8 : gains[k] + 0.2, 0.01);
            update[k] = momentum * update[k] - opt.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) mx += y[2 * i], my += y[2 * i + 1];
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) y[2 * i] -= mx, y[2 * i + 1] -= my;
    }

    Projection out;
    for (std::size_t i = 0; i < n; ++i) {
        out.terms.push_back(set.items[i].term);
        out.coords.push_back({y[2 * i], y[2 * i + 1]});
    }
    return out;
}

inline Projection project_2d(const EmbeddingSet& set, std::uint64_t seed, double perplexity) {
    TsneOptions opt;
    opt.seed = seed;
    opt.perplexity = perplexity;
    return project_2d(set, opt);
}

// ---------------------------------------------------------------------------
// Linear max-margin probe

struct SvmOptions {
    double c = 1.0;
    double tolerance = 1e-3;
    int max_epochs = 1000;
    std::uint64_t seed = 0;  // sweep order only
};

struct BoundaryReport {
    double separation_accuracy = 0.0;
    std::vector<double> weight_vector;
    double bias = 0.0;
    std::size_t n = 0;
    int epochs = 0;

    double decision(const std::vector<double>& x) const {
        double s = bias;
        for (std::size_t k = 0; k < x.size() && k < weight_vector.size(); ++k) s += weight_vector[k] * x[k];
        return s;
    }
};

// Hinge-loss linear SVM trained by dual coordinate descent. The bias is an
// extra constant feature. Labels: +1 masculine, -1 feminine.
inline BoundaryReport fit_linear_svm(const std::vector<std::vector<double>>& x, const std::vector<int>& labels,
                                     const SvmOptions& opt = {}) {
    const std::size_t n = x.size();
    if (n == 0 || labels.size() != n) throw ValidationError("fit_linear_svm: empty input or label count mismatch");
    const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
    const bool has_neg = std::count(labels.begin(), labels.end(), -1) > 0;
    if (!has_pos || !has_neg) throw ValidationError("fit_linear_svm: both classes must be present");
    const std::size_t d = x.front().size();

    std::vector<double> w(d + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> qdiag(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (double v : x[i]) s += v * v;
        qdiag[i] = s;
    }
    auto dot = [&](std::size_t i) {
        double s = w[d];
        for (std::size_t k = 0; k < d; ++k) s += w[k] * x[i][k];
        return s;
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(opt.seed);
    int epoch = 0;
    for (; epoch < opt.max_epochs; ++epoch) {
        for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            const double y = labels[i];
            const double g = y * dot(i) - 1.0;
            double pg = g;
            if (alpha[i] == 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] == opt.c) pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) > 1e-12) {
                const double old = alpha[i];
                alpha[i] = std::min(std::max(old - g / qdiag[i], 0.0), opt.c);
                const double delta = (alpha[i] - old) * y;
                for (std::size_t k = 0; k < d; ++k) w[k] += delta * x[i][k];
                w[d] += delta;
            }
        }
        if (pg_max - pg_min < opt.tolerance) {
            ++epoch;
            break;
        }
    }

    BoundaryReport r;
    r.weight_vector.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    r.bias = w[d];
    r.n = n;
    r.epochs = epoch;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int pred = r.decision(x[i]) >= 0.0 ? 1 : -1;
        if (pred == labels[i]) ++correct;
    }
    r.separation_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(n);
    return r;
}

// Probe on the masculine / feminine items of the set, in full dimension.
inline BoundaryReport fit_linear_boundary(const EmbeddingSet& set, const SvmOptions& opt = {}) {
    const auto gendered = set.restricted({TermGroup::masculine, TermGroup::feminine});
    if (gendered.items.empty()) throw ValidationError("fit_linear_boundary: no gendered items");
    gendered.validate();
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (const auto& it : gendered.items) {
        x.push_back(it.vector);
        y.push_back(it.group == TermGroup::masculine ? 1 : -1);
    }
    return fit_linear_svm(x, y, opt);
}

// ---------------------------------------------------------------------------
// Neighbour groups

struct NeighborGroup {
    std::vector<std::string> terms;
    double cohesion = 0.0;  // mean pairwise distance; smaller is tighter
};

// Maximal cliques (size >= 2) of the mutual k-nearest-neighbour graph over
// the projected points, tightest first. Every member lists every other
// member among its k nearest, so no group exceeds k + 1 terms.
inline std::vector<NeighborGroup> neighbor_clusters(const Projection& proj, std::size_t k) {
    const std::size_t n = proj.coords.size();
    if (k == 0 || k >= n) throw ValidationError("neighbor_clusters: need 0 < k < n (k=" + std::to_string(k) +
                                                ", n=" + std::to_string(n) + ")");
    auto dist = [&](std::size_t i, std::size_t j) {
        return std::hypot(proj.coords[i][0] - proj.coords[j][0], proj.coords[i][1] - proj.coords[j][1]);
    };
    std::vector<std::set<std::size_t>> knn(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) { return dist(i, a) < dist(i, b); });
        knn[i].insert(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k));
    }
    std::vector<std::set<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : knn[i])
            if (knn[j].count(i)) adj[i].insert(j);

    std::vector<std::vector<std::size_t>> cliques;
    // Bron-Kerbosch with pivoting; degrees are bounded by k.
    auto bk = [&](auto&& self, std::vector<std::size_t> r, std::set<std::size_t> p, std::set<std::size_t> x) -> void {
        if (p.empty() && x.empty()) {
            if (r.size() >= 2) cliques.push_back(r);
            return;
        }
        std::size_t pivot = p.empty() ? *x.begin() : *p.begin();
        std::size_t best = 0;
        for (const auto* s : {&p, &x})
            for (std::size_t u : *s) {
                std::size_t c = 0;
                for (std::size_t v : p) c += adj[u].count(v);
                if (c > best) best = c, pivot = u;
            }
        std::vector<std::size_t> candidates;
        for (std::size_t v : p)
            if (!adj[pivot].count(v)) candidates.push_back(v);
        for (std::size_t v : candidates) {
            std::set<std::size_t> np, nx;
            for (std::size_t u : p)
                if (adj[v].count(u)) np.insert(u);
            for (std::size_t u : x)
                if (adj[v].count(u)) nx.insert(u);
            auto nr = r;
            nr.push_back(v);
            self(self, nr, np, nx);
            p.erase(v);
            x.insert(v);
        }
    };
    std::set<std::size_t> all;
    for (std::size_t i = 0; i < n; ++i) all.insert(i);
    bk(bk, {}, all, {});

    std::vector<NeighborGroup> out;
    for (auto& c : cliques) {
        std::sort(c.begin(), c.end());
        NeighborGroup g;
        double total = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = a + 1; b < c.size(); ++b) total += dist(c[a], c[b]), ++pairs;
        g.cohesion = total / static_cast<double>(pairs);
        for (std::size_t i : c) g.terms.push_back(proj.terms[i]);
        std::sort(g.terms.begin(), g.terms.end());
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end(), [](const NeighborGroup& a, const NeighborGroup& b) {
        if (a.cohesion != b.cohesion) return a.cohesion < b.cohesion;
        return a.terms < b.terms;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Figure

struct PlotPoint {
    std::string term;
    TermGroup group = TermGroup::attribute;
    std::array<double, 2> xy{};
    int predicted_side = 0;  // +1 / -1 from the full-space probe, 0 for attributes
};

// Scatter of the projection. The drawn line is a linear separator fitted in
// 2-D to the full-space probe's predictions, i.e. the image of the
// full-dimensional boundary, not a 2-D probe of its own.
inline std::string render_svg(const std::vector<PlotPoint>& points, const std::vector<NeighborGroup>& groups,
                              const std::string& title) {
    if (points.empty()) throw ValidationError("render_svg: no points");
    double xmin = points[0].xy[0], xmax = xmin, ymin = points[0].xy[1], ymax = ymin;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.xy[0]), xmax = std::max(xmax, p.xy[0]);
        ymin = std::min(ymin, p.xy[1]), ymax = std::max(ymax, p.xy[1]);
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
    const double size = 800.0, pad = 40.0;
    auto sx = [&](double x) { return pad + (x - xmin) / span * (size - 2 * pad); };
    auto sy = [&](double y) { return size - pad - (y - ymin) / span * (size - 2 * pad); };
    auto num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return std::string(b);
    };
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '&') o += "&amp;";
            else if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '"') o += "&quot;";
            else o += c;
        }
        return o;
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
    svg += "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
    svg += "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" + esc(title) + "</text>\n";

    std::vector<std::vector<double>> gx;
    std::vector<int> gy;
    for (const auto& p : points)
        if (p.predicted_side != 0) gx.push_back({p.xy[0], p.xy[1]}), gy.push_back(p.predicted_side);
    const bool both = std::count(gy.begin(), gy.end(), 1) > 0 && std::count(gy.begin(), gy.end(), -1) > 0;
    if (both) {
        const auto line = fit_linear_svm(gx, gy);
        const double a = line.weight_vector[0], b = line.weight_vector[1], c = line.bias;
        std::vector<std::array<double, 2>> ends;
        if (std::abs(b) > 1e-12) {
            ends.push_back({xmin, -(a * xmin + c) / b});
            ends.push_back({xmin + span, -(a * (xmin + span) + c) / b});
        } else if (std::abs(a) > 1e-12) {
            ends.push_back({-c / a, ymin});
            ends.push_back({-c / a, ymin + span});
        }
        if (ends.size() == 2)
            svg += "<line x1=\"" + num(sx(ends[0][0])) + "\" y1=\"" + num(sy(ends[0][1])) + "\" x2=\"" +
                   num(sx(ends[1][0])) + "\" y2=\"" + num(sy(ends[1][1])) +
                   "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
    }
    for (const auto& g : groups) {
        std::vector<std::array<double, 2>> pts;
        for (const auto& p : points)
            if (std::find(g.terms.begin(), g.terms.end(), p.term) != g.terms.end()) pts.push_back({sx(p.xy[0]), sy(p.xy[1])});
        if (pts.empty()) continue;
        double cx = 0, cy = 0;
        for (const auto& q : pts) cx += q[0], cy += q[1];
        cx /= static_cast<double>(pts.size()), cy /= static_cast<double>(pts.size());
        double r = 0;
        for (const auto& q : pts) r = std::max(r, std::hypot(q[0] - cx, q[1] - cy));
        svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r + 12) +
               "\" fill=\"none\" stroke=\"#999\"/>\n";
    }
    for (const auto& p : points) {
        const char* color = p.group == TermGroup::masculine ? "#1f77b4" : p.group == TermGroup::feminine ? "#d62728" : "#555";
        svg += "<circle cx=\"" + num(sx(p.xy[0])) + "\" cy=\"" + num(sy(p.xy[1])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + num(sx(p.xy[0]) + 4) + "\" y=\"" + num(sy(p.xy[1]) - 4) +
               "\" font-family=\"sans-serif\" font-size=\"9\" fill=\"" + color + "\">" + esc(p.term) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace entailfair
