#include "iiclab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "iiclab/connectivity.hpp"
#include "iiclab/percolation.hpp"

using namespace iiclab;

namespace {

// hand-built sample: open exactly the listed (vertex, dir) edges
PercolationSample hand_sample(int n, const std::vector<std::pair<Vertex, Dir>>& edges) {
    PercolationSample s;
    s.region = BoxRegion(n);
    s.p = 0.5;
    s.seed = 0;
    s.words.assign(std::size_t((s.region.edge_count() + 63) / 64), 0);
    for (auto [v, d] : edges) {
        REQUIRE(s.region.edge_exists(v, d));
        std::int64_t e = s.region.edge_index(v, d);
        s.words[std::size_t(e >> 6)] |= 1ull << (e & 63);
    }
    return s;
}

// horizontal path graph (0,0)-(1,0)-...-(L,0) rooted at the left end
RootedCluster path_cluster(int L) {
    std::vector<std::pair<Vertex, Dir>> edges;
    for (int x = 0; x < L; ++x) edges.push_back({Vertex{x, 0}, Dir::East});
    auto c = open_cluster(hand_sample(L + 1, edges), Vertex{0, 0});
    REQUIRE(c.has_value());
    REQUIRE(c->size() == L + 1);
    return std::move(*c);
}

// all-pairs shortest hop counts, cubic reference
std::vector<std::vector<int>> floyd_warshall(const RootedCluster& c) {
    int n = c.size();
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> d(std::size_t(n), std::vector<int>(std::size_t(n), inf));
    for (int i = 0; i < n; ++i) {
        d[std::size_t(i)][std::size_t(i)] = 0;
        for (std::uint32_t a = c.adj_off[i]; a < c.adj_off[i + 1]; ++a)
            d[std::size_t(i)][std::size_t(c.adj[a])] = 1;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[std::size_t(i)][std::size_t(j)] =
                    std::min(d[std::size_t(i)][std::size_t(j)],
                             d[std::size_t(i)][std::size_t(k)] + d[std::size_t(k)][std::size_t(j)]);
    return d;
}

// minimum path length under the half-endpoint edge weights, by exhaustive
// simple-path search with branch-and-bound pruning; independent of Dijkstra
double exhaustive_weighted_dist(const RootedCluster& c, const std::vector<double>& w, int s,
                                int t) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> onpath(std::size_t(c.size()), 0);
    auto rec = [&](auto&& self, int u, double len) -> void {
        if (len >= best) return;
        if (u == t) {
            best = len;
            return;
        }
        onpath[std::size_t(u)] = 1;
        for (std::uint32_t a = c.adj_off[u]; a < c.adj_off[u + 1]; ++a) {
            int v = c.adj[a];
            if (onpath[std::size_t(v)]) continue;
            self(self, v, len + (w[std::size_t(u)] + w[std::size_t(v)]) / 2.0);
        }
        onpath[std::size_t(u)] = 0;
    };
    rec(rec, s, 0.0);
    return best;
}

// minimum number of A-vertices over all s-t paths (endpoints counted fully)
int exhaustive_min_marked(const RootedCluster& c, const std::vector<std::uint8_t>& in_a, int s,
                          int t) {
    int best = std::numeric_limits<int>::max();
    std::vector<std::uint8_t> onpath(std::size_t(c.size()), 0);
    auto rec = [&](auto&& self, int u, int cnt) -> void {
        cnt += in_a[std::size_t(u)] ? 1 : 0;
        if (cnt >= best) return;
        if (u == t) {
            best = cnt;
            return;
        }
        onpath[std::size_t(u)] = 1;
        for (std::uint32_t a = c.adj_off[u]; a < c.adj_off[u + 1]; ++a) {
            int v = c.adj[a];
            if (onpath[std::size_t(v)]) continue;
            self(self, v, cnt);
        }
        onpath[std::size_t(u)] = 0;
    };
    rec(rec, s, 0);
    return best;
}

// first seed whose conditioned cluster lands in the wanted size range
RootedCluster small_cluster(int n, int lo, int hi, std::uint64_t from_seed) {
    for (std::uint64_t seed = from_seed;; ++seed) {
        RootedCluster c = iic_approximant(IicFlavor::Conditioned, n, seed);
        if (c.size() >= lo && c.size() <= hi) return c;
    }
}

std::vector<double> random_weights(int n, std::uint64_t seed, double scale) {
    Xoshiro256pp rng(seed);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (double& x : w) x = scale * rng.uniform01();
    return w;
}

}  // namespace

TEST_CASE("chemical distances: source zero and path graph") {
    RootedCluster c = path_cluster(7);
    int s = c.local_of(Vertex{0, 0});
    auto d = chemical_distances(c, s);
    CHECK(d[std::size_t(s)] == 0);
    for (int x = 0; x <= 7; ++x) CHECK(d[std::size_t(c.local_of(Vertex{x, 0}))] == x);
    CHECK_THROWS_AS(chemical_distances(c, -1), std::out_of_range);
    CHECK_THROWS_AS(chemical_distances(c, c.size()), std::out_of_range);
}

TEST_CASE("chemical distances match the all-pairs reference") {
    RootedCluster c = small_cluster(7, 40, 200, 11);
    auto ref = floyd_warshall(c);
    Xoshiro256pp rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        int s = int(rng.bounded(std::uint64_t(c.size())));
        auto d = chemical_distances(c, s);
        for (int v = 0; v < c.size(); ++v)
            CHECK(d[std::size_t(v)] == ref[std::size_t(s)][std::size_t(v)]);
    }
}

TEST_CASE("weighted distances: unit weight reproduces hop counts exactly") {
    RootedCluster c = small_cluster(8, 60, 400, 3);
    WeightField ones = make_weight_field(c, std::vector<double>(std::size_t(c.size()), 1.0));
    CHECK(ones.second_moment == 1.0);
    Xoshiro256pp rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        int s = int(rng.bounded(std::uint64_t(c.size())));
        auto chem = chemical_distances(c, s);
        auto wd = weighted_distances(c, ones, s);
        for (int v = 0; v < c.size(); ++v)
            CHECK(wd[std::size_t(v)] == double(chem[std::size_t(v)]));
    }
}

TEST_CASE("weighted distances: zero weight collapses the metric") {
    RootedCluster c = path_cluster(5);
    WeightField zero = make_weight_field(c, std::vector<double>(std::size_t(c.size()), 0.0));
    auto wd = weighted_distances(c, zero, 0);
    for (double d : wd) CHECK(d == 0.0);
    CHECK(zero.second_moment == 0.0);
}

TEST_CASE("weighted distances reject invalid weights") {
    RootedCluster c = path_cluster(3);
    WeightField bad;
    bad.cluster = &c;
    bad.w.assign(std::size_t(c.size()), 1.0);
    bad.w[1] = -0.25;
    CHECK_THROWS_AS(weighted_distances(c, bad, 0), std::invalid_argument);
    bad.w[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(weighted_distances(c, bad, 0), std::invalid_argument);
    bad.w.pop_back();
    CHECK_THROWS_AS(weighted_distances(c, bad, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_weight_field(c, bad.w), std::invalid_argument);
}

TEST_CASE("weighted distances match exhaustive path search on small clusters") {
    for (std::uint64_t base : {2ull, 21ull, 47ull}) {
        RootedCluster c = small_cluster(4, 8, 18, base);
        // indicator weight over a seeded vertex subset
        std::vector<std::uint8_t> in_a(std::size_t(c.size()), 0);
        Xoshiro256pp rng(derive_seed(base, "subset"));
        for (auto& b : in_a) b = rng.uniform01() < 0.4 ? 1 : 0;
        double p = 0.31;
        std::vector<double> w(std::size_t(c.size()), 0.0);
        for (int i = 0; i < c.size(); ++i)
            if (in_a[std::size_t(i)]) w[std::size_t(i)] = 1.0 / std::sqrt(p);
        WeightField field = make_weight_field(c, w);

        for (int s = 0; s < c.size(); ++s) {
            auto wd = weighted_distances(c, field, s);
            for (int t = 0; t < c.size(); ++t) {
                double oracle = exhaustive_weighted_dist(c, field.w, s, t);
                CHECK(wd[std::size_t(t)] == doctest::Approx(oracle).epsilon(1e-12));

                // path-count identity: sqrt(p) * dist is the minimum marked
                // count minus the half-endpoint discount, hence in [N-1, N]
                int n_marked = exhaustive_min_marked(c, in_a, s, t);
                double half_ends = (in_a[std::size_t(s)] + in_a[std::size_t(t)]) / 2.0;
                double scaled = wd[std::size_t(t)] * std::sqrt(p);
                CHECK(scaled == doctest::Approx(double(n_marked) - half_ends).epsilon(1e-9));
                if (n_marked > 0) {
                    CHECK(scaled >= double(n_marked) - 1.0 - 1e-9);
                    CHECK(scaled <= double(n_marked) + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("weighted distance is a pseudometric on sampled triples") {
    RootedCluster c = small_cluster(8, 80, 500, 17);
    WeightField field = make_weight_field(c, random_weights(c.size(), 404, 3.0));
    Xoshiro256pp rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        int a = int(rng.bounded(std::uint64_t(c.size())));
        int b = int(rng.bounded(std::uint64_t(c.size())));
        int d = int(rng.bounded(std::uint64_t(c.size())));
        auto da = weighted_distances(c, field, a);
        auto db = weighted_distances(c, field, b);
        CHECK(da[std::size_t(a)] == 0.0);
        CHECK(da[std::size_t(b)] >= 0.0);
        CHECK(da[std::size_t(b)] ==
              doctest::Approx(db[std::size_t(a)]).epsilon(1e-9));  // symmetry
        CHECK(da[std::size_t(d)] <=
              da[std::size_t(b)] + db[std::size_t(d)] + 1e-9 * (1.0 + da[std::size_t(d)]));
    }
}

TEST_CASE("pointwise weight domination implies pairwise distance domination") {
    RootedCluster c = small_cluster(6, 30, 200, 29);
    auto lo = random_weights(c.size(), 51, 2.0);
    auto hi = lo;
    Xoshiro256pp rng(52);
    for (double& x : hi) x += rng.uniform01();
    WeightField flo = make_weight_field(c, lo);
    WeightField fhi = make_weight_field(c, hi);
    for (int s = 0; s < c.size(); s += 3) {
        auto dlo = weighted_distances(c, flo, s);
        auto dhi = weighted_distances(c, fhi, s);
        for (int v = 0; v < c.size(); ++v)
            CHECK(dlo[std::size_t(v)] <= dhi[std::size_t(v)] + 1e-12);
    }
}

TEST_CASE("degree-biased second moment: hand arithmetic on a path") {
    RootedCluster c = path_cluster(2);  // degrees 1,2,1
    WeightField f = make_weight_field(c, {3.0, 0.5, 2.0});
    // (1*9 + 2*0.25 + 1*4) / 4
    CHECK(f.second_moment == doctest::Approx((9.0 + 0.5 + 4.0) / 4.0).epsilon(1e-15));
}

TEST_CASE("scale weight: support, value, and degenerate normalization") {
    RootedCluster c = iic_approximant(IicFlavor::Conditioned, 8, 5);
    CoveringSystem sys = CoveringSystem::random_shifted(123);
    NormalizerRecord p_hat{"test", 0.37, 0.01};

    for (auto engine : {BackboneEngine::Flow, BackboneEngine::Blocks}) {
        WeightField f = scale_weight(c, sys, 3, 0.25, p_hat, engine);
        DeepBackboneResult deep = deep_backbone_union(c, sys, 3, 0.25, engine);
        double expect = 1.0 / std::sqrt(0.37);
        for (int i = 0; i < c.size(); ++i) {
            if (deep.in_union[std::size_t(i)])
                CHECK(f.w[std::size_t(i)] == expect);
            else
                CHECK(f.w[std::size_t(i)] == 0.0);
        }
        REQUIRE(f.normalizers.size() == 1);
        CHECK(f.normalizers[0].value == 0.37);
        CHECK(f.normalizers[0].source == "test");
    }

    CHECK_THROWS_AS(scale_weight(c, sys, 3, 0.25, NormalizerRecord{"", 0.0, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(scale_weight(c, sys, 3, 0.25, NormalizerRecord{"", 1.5, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("scale weight: scales too shallow for the threshold give the zero field") {
    RootedCluster c = iic_approximant(IicFlavor::Conditioned, 8, 5);
    CoveringSystem sys = CoveringSystem::random_shifted(123);
    // side-2 patches cannot hold a depth-1 ball, so scale 2 is always empty
    WeightField f = scale_weight(c, sys, 2, 0.25, NormalizerRecord{"", 0.5, 0.0});
    for (double x : f.w) CHECK(x == 0.0);
    CHECK(f.second_moment == 0.0);
}

TEST_CASE("scale weight: plug-in identity under the estimating ensemble") {
    // estimate p_hat as the root-membership frequency, then the reweighted
    // ensemble mean of w(root)^2 is exactly 1 by construction
    CoveringSystem sys = CoveringSystem::random_shifted(777);
    const int k = 3, n = 8, clusters = 120;
    int hits = 0;
    std::vector<RootedCluster> ensemble;
    for (int i = 0; i < clusters; ++i) {
        ensemble.push_back(iic_approximant(IicFlavor::Conditioned, n, derive_seed(42, "c", i)));
        if (root_in_deep_backbone(ensemble.back(), sys, k, 0.25)) ++hits;
    }
    REQUIRE(hits > 0);
    double p_hat = double(hits) / double(clusters);
    NormalizerRecord rec{"ensemble:root-freq", p_hat, 0.0};
    double acc = 0.0;
    for (const RootedCluster& c : ensemble) {
        WeightField f = scale_weight(c, sys, k, 0.25, rec);
        double wr = f.w[std::size_t(c.root_local())];
        acc += wr * wr;
    }
    CHECK(acc / double(clusters) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixture weight: single scale, hand arithmetic, moment linearity") {
    RootedCluster c = path_cluster(4);  // 5 vertices
    const double coeff = 6.0 / (M_PI * M_PI);

    WeightField w2 = make_weight_field(c, {0.0, 1.5, 2.0, 0.0, 3.0});
    WeightField single = mixture_weight(c, {{1, &w2}});
    for (int i = 0; i < c.size(); ++i)
        CHECK(single.w[std::size_t(i)] ==
              doctest::Approx(std::sqrt(coeff) * w2.w[std::size_t(i)]).epsilon(1e-15));

    WeightField w4 = make_weight_field(c, {1.0, 0.0, 0.5, 2.0, 0.0});
    WeightField mix = mixture_weight(c, {{1, &w2}, {2, &w4}});
    for (int i = 0; i < c.size(); ++i) {
        double a = w2.w[std::size_t(i)], b = w4.w[std::size_t(i)];
        CHECK(mix.w[std::size_t(i)] ==
              doctest::Approx(std::sqrt(coeff * (a * a + b * b / 4.0))).epsilon(1e-12));
    }
    // second moment is linear in the component moments
    CHECK(mix.second_moment ==
          doctest::Approx(coeff * (w2.second_moment + w4.second_moment / 4.0)).epsilon(1e-12));

    // components with unit second moment give a mixture moment <= 1
    auto normalize = [&](const WeightField& f) {
        std::vector<double> scaled = f.w;
        double s = 1.0 / std::sqrt(f.second_moment);
        for (double& x : scaled) x *= s;
        return make_weight_field(c, scaled);
    };
    WeightField u2 = normalize(w2), u4 = normalize(w4);
    CHECK(u2.second_moment == doctest::Approx(1.0).epsilon(1e-12));
    WeightField unit_mix = mixture_weight(c, {{1, &u2}, {2, &u4}});
    CHECK(unit_mix.second_moment <= 1.0 + 1e-12);
    CHECK(unit_mix.second_moment ==
          doctest::Approx(coeff * (1.0 + 1.0 / 4.0)).epsilon(1e-12));

    CHECK_THROWS_AS(mixture_weight(c, {}), std::invalid_argument);
    CHECK_THROWS_AS(mixture_weight(c, {{1, &w2}, {1, &w4}}), std::invalid_argument);
    CHECK_THROWS_AS(mixture_weight(c, {{0, &w2}}), std::invalid_argument);
    RootedCluster other = path_cluster(4);
    WeightField foreign = make_weight_field(other, {0, 0, 0, 0, 0});
    CHECK_THROWS_AS(mixture_weight(c, {{1, &foreign}}), std::invalid_argument);
}

TEST_CASE("large patch union matches the per-vertex patch volume rule") {
    for (std::uint64_t seed : {4ull, 9ull}) {
        RootedCluster c = iic_approximant(IicFlavor::Conditioned, 8, seed);
        CoveringSystem sys = CoveringSystem::random_shifted(derive_seed(seed, "cov"));
        for (int k : {2, 3, 4}) {
            double c4 = 0.5, d_prime = 1.5;
            double threshold = c4 * std::pow(2.0, k * d_prime);
            auto got = large_patch_union(c, sys, k, c4, d_prime);
            for (int i = 0; i < c.size(); ++i) {
                bool expect = false;
                for (const Patch& p : patches_at(sys, k, c.vertex(i))) {
                    Rect r{p.corner.x, p.corner.y, p.corner.x + p.side - 1,
                           p.corner.y + p.side - 1};
                    if (double(cluster_volume_in_rect(c, r)) >= threshold) expect = true;
                }
                CHECK(bool(got[std::size_t(i)]) == expect);
            }
        }
    }
    RootedCluster c = iic_approximant(IicFlavor::Conditioned, 4, 1);
    CoveringSystem sys = CoveringSystem::unshifted();
    CHECK_THROWS_AS(large_patch_union(c, sys, 2, 0.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(large_patch_union(c, sys, 2, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("hybrid weight: combination formula, support union, lower bound") {
    RootedCluster c = iic_approximant(IicFlavor::Conditioned, 8, 5);
    CoveringSystem sys = CoveringSystem::random_shifted(123);
    const int k = 3;
    const double eps = 0.25, c4 = 0.25, d_prime = 1.2;
    NormalizerRecord p_hat{"p", 0.4, 0.0}, q_hat{"q", 0.6, 0.0};

    WeightField hybrid = hybrid_weight(c, sys, k, eps, p_hat, q_hat, c4, d_prime);
    WeightField deep = scale_weight(c, sys, k, eps, p_hat);
    auto large = large_patch_union(c, sys, k, c4, d_prime);

    double lv = 1.0 / std::sqrt(0.6);
    double floor_val = std::min(1.0 / std::sqrt(0.4), lv);
    bool any_support = false;
    for (int i = 0; i < c.size(); ++i) {
        double a = deep.w[std::size_t(i)];
        double b = large[std::size_t(i)] ? lv : 0.0;
        CHECK(hybrid.w[std::size_t(i)] ==
              doctest::Approx(std::sqrt((a * a + b * b) / 2.0)).epsilon(1e-15));
        bool in_support = hybrid.w[std::size_t(i)] > 0.0;
        CHECK(in_support == (a > 0.0 || b > 0.0));
        if (in_support) {
            any_support = true;
            CHECK(a + b >= floor_val - 1e-12);
        }
    }
    CHECK(any_support);
    REQUIRE(hybrid.normalizers.size() == 2);
    CHECK(hybrid.normalizers[0].source == "p");
    CHECK(hybrid.normalizers[1].source == "q");

    // impossible volume threshold and a shallow scale: identically zero
    WeightField zero = hybrid_weight(c, sys, 2, eps, p_hat, q_hat, 1e12, 1.2);
    for (double x : zero.w) CHECK(x == 0.0);

    CHECK_THROWS_AS(hybrid_weight(c, sys, k, eps, p_hat, NormalizerRecord{"", 0.0, 0.0}, c4,
                                  d_prime),
                    std::invalid_argument);
}

TEST_CASE("distance lower bound report: unit weight is the identity line") {
    RootedCluster c = iic_approximant(IicFlavor::Conditioned, 32, 7);
    WeightField ones = make_weight_field(c, std::vector<double>(std::size_t(c.size()), 1.0));
    DistanceFit fit = verify_distance_lowerbound(c, ones, 200, 0.0, 8, 99);
    REQUIRE(fit.pairs_used >= 10);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(fit.c_fit == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.violation_fraction == 0.0);
    CHECK(fit.floor == 8);
    for (const DistancePair& pr : fit.pairs) {
        CHECK(pr.dist_g >= 8);
        CHECK(pr.dist_w == double(pr.dist_g));
    }
    if (fit.pairs_floor2x > 0) CHECK(fit.slope_floor2x == doctest::Approx(1.0).epsilon(1e-9));

    // determinism
    DistanceFit again = verify_distance_lowerbound(c, ones, 200, 0.0, 8, 99);
    REQUIRE(again.pairs.size() == fit.pairs.size());
    for (std::size_t i = 0; i < fit.pairs.size(); ++i) {
        CHECK(again.pairs[i].dist_g == fit.pairs[i].dist_g);
        CHECK(again.pairs[i].dist_w == fit.pairs[i].dist_w);
    }
}

TEST_CASE("distance lower bound report: doubling the weight shifts only the intercept") {
    RootedCluster c = iic_approximant(IicFlavor::Conditioned, 32, 7);
    WeightField base = make_weight_field(c, random_weights(c.size(), 31, 1.0));
    auto doubled_w = base.w;
    for (double& x : doubled_w) x *= 2.0;
    WeightField doubled = make_weight_field(c, doubled_w);

    DistanceFit f1 = verify_distance_lowerbound(c, base, 150, 0.1, 8, 5);
    DistanceFit f2 = verify_distance_lowerbound(c, doubled, 150, 0.1, 8, 5);
    REQUIRE(f1.pairs_used == f2.pairs_used);
    CHECK(f2.slope == doctest::Approx(f1.slope).epsilon(1e-9));
    CHECK(f2.intercept - f1.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(f2.c_fit == doctest::Approx(2.0 * f1.c_fit).epsilon(1e-9));
    CHECK(f2.violation_fraction == doctest::Approx(f1.violation_fraction).epsilon(1e-12));
}

TEST_CASE("distance lower bound report: too few pairs raises") {
    RootedCluster c = path_cluster(4);  // diameter 4 < floor 8: nothing usable
    WeightField ones = make_weight_field(c, std::vector<double>(std::size_t(c.size()), 1.0));
    CHECK_THROWS_AS(verify_distance_lowerbound(c, ones, 100, 0.0, 8, 1), std::runtime_error);
    CHECK_THROWS_AS(verify_distance_lowerbound(c, ones, 0, 0.0, 8, 1), std::invalid_argument);
    CHECK_THROWS_AS(verify_distance_lowerbound(c, ones, 100, 0.0, 0, 1), std::invalid_argument);
}
