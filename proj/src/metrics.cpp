#include "iiclab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace iiclab {

namespace {

void check_weights(const RootedCluster& cluster, const std::vector<double>& w) {
    if (w.size() != std::size_t(cluster.size()))
        throw std::invalid_argument("weight field size does not match cluster");
    for (double x : w)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw std::invalid_argument("weight field has a negative or non-finite entry");
}

void check_probability(const NormalizerRecord& rec, const char* what) {
    if (!(rec.value > 0.0) || rec.value > 1.0 || !std::isfinite(rec.value))
        throw std::invalid_argument(std::string("degenerate normalization: ") + what + " = " +
                                    std::to_string(rec.value));
}

NormalizerRecord named(NormalizerRecord rec, const char* fallback) {
    if (rec.source.empty()) rec.source = fallback;
    return rec;
}

}  // namespace

double degree_biased_second_moment(const RootedCluster& cluster, const std::vector<double>& w) {
    double mass = 0.0;
    for (int i = 0; i < cluster.size(); ++i)
        mass += double(cluster.degree(i)) * w[std::size_t(i)] * w[std::size_t(i)];
    return mass / double(cluster.sum_degree);
}

WeightField make_weight_field(const RootedCluster& cluster, std::vector<double> w,
                              std::vector<NormalizerRecord> normalizers) {
    check_weights(cluster, w);
    WeightField f;
    f.cluster = &cluster;
    f.w = std::move(w);
    f.second_moment = degree_biased_second_moment(cluster, f.w);
    f.normalizers = std::move(normalizers);
    return f;
}

std::vector<std::int32_t> chemical_distances(const RootedCluster& cluster, int source) {
    if (source < 0 || source >= cluster.size())
        throw std::out_of_range("chemical_distances: source not in cluster");
    std::vector<std::int32_t> dist(std::size_t(cluster.size()), -1);
    std::vector<std::int32_t> queue;
    queue.reserve(std::size_t(cluster.size()));
    dist[std::size_t(source)] = 0;
    queue.push_back(source);
    for (std::size_t head = 0; head < queue.size(); ++head) {
        int u = queue[head];
        std::int32_t du = dist[std::size_t(u)];
        for (std::uint32_t a = cluster.adj_off[u]; a < cluster.adj_off[u + 1]; ++a) {
            int v = cluster.adj[a];
            if (dist[std::size_t(v)] < 0) {
                dist[std::size_t(v)] = du + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

std::vector<double> weighted_distances(const RootedCluster& cluster, const WeightField& field,
                                       int source) {
    if (source < 0 || source >= cluster.size())
        throw std::out_of_range("weighted_distances: source not in cluster");
    check_weights(cluster, field.w);

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(std::size_t(cluster.size()), kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[std::size_t(source)] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (du > dist[std::size_t(u)]) continue;
        double wu = field.w[std::size_t(u)];
        for (std::uint32_t a = cluster.adj_off[u]; a < cluster.adj_off[u + 1]; ++a) {
            int v = cluster.adj[a];
            double nd = du + (wu + field.w[std::size_t(v)]) / 2.0;
            if (nd < dist[std::size_t(v)]) {
                dist[std::size_t(v)] = nd;
                heap.emplace(nd, v);
            }
        }
    }
    return dist;
}

WeightField scale_weight(const RootedCluster& cluster, const CoveringSystem& sys, int k,
                         double epsilon, const NormalizerRecord& p_hat, BackboneEngine engine) {
    check_probability(p_hat, "p_hat");
    DeepBackboneResult deep = deep_backbone_union(cluster, sys, k, epsilon, engine);
    double value = 1.0 / std::sqrt(p_hat.value);
    std::vector<double> w(std::size_t(cluster.size()), 0.0);
    for (int i = 0; i < cluster.size(); ++i)
        if (deep.in_union[std::size_t(i)]) w[std::size_t(i)] = value;
    return make_weight_field(cluster, std::move(w), {named(p_hat, "p_hat")});
}

WeightField mixture_weight(const RootedCluster& cluster,
                           const std::vector<MixtureComponent>& parts) {
    if (parts.empty()) throw std::invalid_argument("mixture_weight: no components");
    constexpr double kCoeff = 6.0 / (M_PI * M_PI);
    std::vector<double> acc(std::size_t(cluster.size()), 0.0);
    std::vector<NormalizerRecord> records;
    std::vector<int> seen;
    for (const MixtureComponent& part : parts) {
        if (part.j < 1) throw std::invalid_argument("mixture_weight: scale index j must be >= 1");
        if (std::find(seen.begin(), seen.end(), part.j) != seen.end())
            throw std::invalid_argument("mixture_weight: duplicate scale index");
        seen.push_back(part.j);
        if (!part.field || part.field->cluster != &cluster)
            throw std::invalid_argument("mixture_weight: component built on a different cluster");
        check_weights(cluster, part.field->w);
        double inv_j2 = 1.0 / (double(part.j) * double(part.j));
        for (int i = 0; i < cluster.size(); ++i) {
            double x = part.field->w[std::size_t(i)];
            acc[std::size_t(i)] += x * x * inv_j2;
        }
        for (const NormalizerRecord& rec : part.field->normalizers) {
            NormalizerRecord tagged = rec;
            tagged.source = "j=" + std::to_string(part.j) + ":" + tagged.source;
            records.push_back(std::move(tagged));
        }
    }
    for (double& x : acc) x = std::sqrt(kCoeff * x);
    return make_weight_field(cluster, std::move(acc), std::move(records));
}

std::vector<std::uint8_t> large_patch_union(const RootedCluster& cluster,
                                            const CoveringSystem& sys, int k, double c4,
                                            double d_prime) {
    if (!(c4 > 0.0)) throw std::invalid_argument("large_patch_union: c4 must be positive");
    if (!(d_prime < 2.0))
        throw std::invalid_argument("large_patch_union: d' must be below the ambient dimension 2");
    double threshold = c4 * std::pow(2.0, double(k) * d_prime);

    std::vector<std::uint8_t> in_union(std::size_t(cluster.size()), 0);
    auto key_of = [](Vertex c) {
        return (std::uint64_t(std::uint32_t(c.x)) << 32) | std::uint64_t(std::uint32_t(c.y));
    };
    // one patch per family per vertex: count cluster volume per patch, then
    // mark the vertices of patches at or above the threshold
    for (std::uint8_t sigma = 0; sigma < 4; ++sigma) {
        std::unordered_map<std::uint64_t, std::int64_t> volume;
        for (int i = 0; i < cluster.size(); ++i) {
            Patch p = patch_of(sys, k, sigma, cluster.vertex(i));
            ++volume[key_of(p.corner)];
        }
        for (int i = 0; i < cluster.size(); ++i) {
            if (in_union[std::size_t(i)]) continue;
            Patch p = patch_of(sys, k, sigma, cluster.vertex(i));
            if (double(volume[key_of(p.corner)]) >= threshold) in_union[std::size_t(i)] = 1;
        }
    }
    return in_union;
}

WeightField hybrid_weight(const RootedCluster& cluster, const CoveringSystem& sys, int k,
                          double epsilon, const NormalizerRecord& p_hat,
                          const NormalizerRecord& q_hat, double c4, double d_prime,
                          BackboneEngine engine) {
    check_probability(p_hat, "p_hat");
    check_probability(q_hat, "q_hat");
    WeightField deep = scale_weight(cluster, sys, k, epsilon, p_hat, engine);
    std::vector<std::uint8_t> large = large_patch_union(cluster, sys, k, c4, d_prime);
    double large_value = 1.0 / std::sqrt(q_hat.value);
    std::vector<double> w(std::size_t(cluster.size()), 0.0);
    for (int i = 0; i < cluster.size(); ++i) {
        double a = deep.w[std::size_t(i)];
        double b = large[std::size_t(i)] ? large_value : 0.0;
        w[std::size_t(i)] = std::sqrt((a * a + b * b) / 2.0);
    }
    return make_weight_field(cluster, std::move(w),
                             {named(p_hat, "p_hat"), named(q_hat, "q_hat")});
}

namespace {

struct OlsLine {
    double slope = 0.0, intercept = 0.0, slope_se = 0.0;
    std::size_t n = 0;
};

OlsLine ols(const std::vector<double>& x, const std::vector<double>& y) {
    OlsLine line;
    line.n = x.size();
    if (line.n < 2) return line;
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < line.n; ++i) {
        xbar += x[i];
        ybar += y[i];
    }
    xbar /= double(line.n);
    ybar /= double(line.n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < line.n; ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0.0) return line;
    line.slope = sxy / sxx;
    line.intercept = ybar - line.slope * xbar;
    if (line.n > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < line.n; ++i) {
            double r = y[i] - line.intercept - line.slope * x[i];
            ssr += r * r;
        }
        line.slope_se = std::sqrt(ssr / double(line.n - 2) / sxx);
    }
    return line;
}

}  // namespace

DistanceFit verify_distance_lowerbound(const RootedCluster& cluster, const WeightField& field,
                                       std::size_t target_pairs, double delta, int dist_floor,
                                       std::uint64_t seed) {
    if (dist_floor < 1)
        throw std::invalid_argument("verify_distance_lowerbound: floor must be >= 1");
    if (target_pairs == 0)
        throw std::invalid_argument("verify_distance_lowerbound: no pairs requested");
    check_weights(cluster, field.w);

    DistanceFit fit;
    fit.delta = delta;
    fit.floor = dist_floor;

    Xoshiro256pp rng(derive_seed(seed, "dist-pairs"));
    // one target per dyadic chemical-distance band per source spreads the
    // abscissae without flooding the fit with short pairs
    std::vector<std::vector<std::int32_t>> bands(32);
    std::size_t max_sources = std::max<std::size_t>(16, 4 * target_pairs);
    for (std::size_t s = 0; s < max_sources && fit.pairs.size() < target_pairs; ++s) {
        int source = int(rng.bounded(std::uint64_t(cluster.size())));
        std::vector<std::int32_t> chem = chemical_distances(cluster, source);
        for (auto& band : bands) band.clear();
        bool any = false;
        for (int v = 0; v < cluster.size(); ++v) {
            std::int32_t d = chem[std::size_t(v)];
            if (d < dist_floor) continue;
            int b = 0;
            while ((std::int64_t(dist_floor) << (b + 1)) <= d && b + 1 < int(bands.size())) ++b;
            bands[std::size_t(b)].push_back(v);
            any = true;
        }
        if (!any) continue;
        std::vector<double> wdist = weighted_distances(cluster, field, source);
        for (const auto& band : bands) {
            if (band.empty() || fit.pairs.size() >= target_pairs) continue;
            int v = band[std::size_t(rng.bounded(std::uint64_t(band.size())))];
            double dw = wdist[std::size_t(v)];
            if (dw <= 0.0) {
                ++fit.pairs_zero_weighted;
                continue;
            }
            fit.pairs.push_back(DistancePair{chem[std::size_t(v)], dw});
        }
    }

    if (fit.pairs.size() < 10)
        throw std::runtime_error("verify_distance_lowerbound: insufficient data (" +
                                 std::to_string(fit.pairs.size()) + " usable pairs, need 10)");

    std::vector<double> lx, ly;
    lx.reserve(fit.pairs.size());
    ly.reserve(fit.pairs.size());
    for (const DistancePair& pr : fit.pairs) {
        lx.push_back(std::log(double(pr.dist_g)));
        ly.push_back(std::log(pr.dist_w));
    }
    OlsLine line = ols(lx, ly);
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.slope_se = line.slope_se;
    fit.pairs_used = fit.pairs.size();

    // pin the slope at 1+delta; the least-squares constant is the mean residual
    double logc = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) logc += ly[i] - (1.0 + delta) * lx[i];
    logc /= double(lx.size());
    fit.c_fit = std::exp(logc);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
        if (ly[i] < logc + (1.0 + delta) * lx[i] - 1e-9) ++violations;
    fit.violation_fraction = double(violations) / double(lx.size());

    // floor sensitivity: refit over the long pairs only
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < lx.size(); ++i)
        if (fit.pairs[i].dist_g >= 2 * dist_floor) {
            fx.push_back(lx[i]);
            fy.push_back(ly[i]);
        }
    if (fx.size() >= 10) {
        OlsLine refit = ols(fx, fy);
        fit.slope_floor2x = refit.slope;
        fit.pairs_floor2x = refit.n;
    }
    return fit;
}

}  // namespace iiclab
