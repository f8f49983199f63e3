#include "iiclab/walk.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace iiclab {

namespace {

inline int walk_step(const RootedCluster& c, int v, Xoshiro256pp& rng) {
    std::uint32_t deg = c.adj_off[v + 1] - c.adj_off[v];
    return c.adj[c.adj_off[v] + std::uint32_t(rng.bounded(deg))];
}

}  // namespace

WalkTrace simulate_walk(const RootedCluster& cluster, int start, std::int64_t T,
                        std::uint64_t seed) {
    if (start < 0 || start >= cluster.size())
        throw std::out_of_range("simulate_walk: start not in cluster");
    if (T < 0) throw std::invalid_argument("simulate_walk: negative step count");

    WalkTrace tr;
    tr.cluster = &cluster;
    tr.start = start;
    tr.path.reserve(std::size_t(T) + 1);
    tr.chem.reserve(std::size_t(T) + 1);
    tr.euclid_sq.reserve(std::size_t(T) + 1);
    tr.max_chem.reserve(std::size_t(T) + 1);
    tr.max_euclid_sq.reserve(std::size_t(T) + 1);

    std::vector<std::int32_t> dist0 = chemical_distances(cluster, start);
    Xoshiro256pp rng(seed);
    Vertex v0 = cluster.vertex(start);
    int v = start;
    tr.path.push_back(start);
    tr.chem.push_back(0);
    tr.euclid_sq.push_back(0);
    tr.max_chem.push_back(0);
    tr.max_euclid_sq.push_back(0);
    for (std::int64_t t = 1; t <= T; ++t) {
        v = walk_step(cluster, v, rng);
        std::int32_t d = dist0[std::size_t(v)];
        std::int64_t e = euclid_sq(cluster.vertex(v), v0);
        tr.path.push_back(v);
        tr.chem.push_back(d);
        tr.euclid_sq.push_back(e);
        tr.max_chem.push_back(std::max(tr.max_chem.back(), d));
        tr.max_euclid_sq.push_back(std::max(tr.max_euclid_sq.back(), e));
    }
    return tr;
}

HittingTimes hitting_times(const WalkTrace& trace, std::span<const int> radii) {
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (radii[i] < radii[i - 1])
            throw std::invalid_argument("hitting_times: radii must be nondecreasing");

    HittingTimes ht;
    ht.chem.assign(radii.size(), -1);
    ht.euclid.assign(radii.size(), -1);
    std::size_t rc = 0, re = 0;
    for (std::size_t t = 0; t < trace.path.size(); ++t) {
        while (rc < radii.size() && trace.max_chem[t] >= radii[rc])
            ht.chem[rc++] = std::int64_t(t);
        while (re < radii.size() &&
               trace.max_euclid_sq[t] >= std::int64_t(radii[re]) * std::int64_t(radii[re]))
            ht.euclid[re++] = std::int64_t(t);
        if (rc == radii.size() && re == radii.size()) break;
    }
    return ht;
}

namespace {

void check_grid_i64(const std::vector<std::int64_t>& g, const char* what) {
    if (g.empty()) throw std::invalid_argument(std::string(what) + ": empty grid");
    if (g.front() < 1) throw std::invalid_argument(std::string(what) + ": grid must be positive");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i] <= g[i - 1])
            throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
}

EnsembleCell pool_cells(const std::vector<double>& sums, const std::vector<std::int32_t>& counts,
                        std::int64_t total_walks) {
    EnsembleCell cell;
    double sum = 0.0;
    std::vector<double> cluster_means;
    for (std::size_t c = 0; c < sums.size(); ++c) {
        cell.count += counts[c];
        sum += sums[c];
        if (counts[c] > 0) cluster_means.push_back(sums[c] / double(counts[c]));
    }
    if (cell.count > 0) cell.mean = sum / double(cell.count);
    if (cluster_means.size() > 1) {
        double m = 0.0;
        for (double x : cluster_means) m += x;
        m /= double(cluster_means.size());
        double var = 0.0;
        for (double x : cluster_means) var += (x - m) * (x - m);
        var /= double(cluster_means.size() - 1);
        cell.se = std::sqrt(var / double(cluster_means.size()));
    }
    cell.censored_fraction =
        total_walks > 0 ? 1.0 - double(cell.count) / double(total_walks) : 0.0;
    return cell;
}

}  // namespace

DisplacementEnsemble displacement_ensemble(const EnsembleOptions& opts) {
    check_grid_i64(opts.t_grid, "displacement_ensemble: T");
    std::vector<std::int64_t> r64(opts.r_grid.begin(), opts.r_grid.end());
    check_grid_i64(r64, "displacement_ensemble: R");
    if (opts.clusters < 1 || opts.walks_per_cluster < 1)
        throw std::invalid_argument("displacement_ensemble: budgets must be positive");

    DisplacementEnsemble ens;
    ens.opts = opts;
    const std::size_t nt = opts.t_grid.size(), nr = opts.r_grid.size();
    const std::int64_t tmax = opts.t_grid.back();

    for (int ci = 0; ci < opts.clusters; ++ci) {
        std::uint64_t cseed = derive_seed(opts.seed, "cluster", std::uint64_t(ci));
        RootedCluster cluster =
            iic_approximant(opts.flavor, opts.n, cseed, opts.p, opts.rejection_cap);
        int start = cluster.root_local();
        std::vector<std::int32_t> dist0 = chemical_distances(cluster, start);
        Vertex v0 = cluster.vertex(start);

        ClusterWalkStats st;
        st.sum_at_chem_sq.assign(nt, 0.0);
        st.sum_max_chem_sq.assign(nt, 0.0);
        st.sum_at_euc_sq.assign(nt, 0.0);
        st.sum_max_euc_sq.assign(nt, 0.0);
        st.alive.assign(nt, 0);
        st.sum_tau_chem.assign(nr, 0.0);
        st.sum_tau_euc.assign(nr, 0.0);
        st.hit_chem.assign(nr, 0);
        st.hit_euc.assign(nr, 0);
        st.walks = opts.walks_per_cluster;

        for (int w = 0; w < opts.walks_per_cluster; ++w) {
            Xoshiro256pp rng(derive_seed(cseed, "walk", std::uint64_t(w)));
            int v = start;
            std::int32_t maxc = 0;
            std::int64_t maxe = 0;
            std::size_t ti = 0, rc = 0, re = 0;
            // t=0 crossings (radius grids start at >= 1, so only relevant
            // for the degenerate start-on-boundary case handled below)
            for (std::int64_t t = 1; t <= tmax; ++t) {
                v = walk_step(cluster, v, rng);
                std::int32_t d = dist0[std::size_t(v)];
                std::int64_t e = euclid_sq(cluster.vertex(v), v0);
                maxc = std::max(maxc, d);
                maxe = std::max(maxe, e);
                while (rc < nr && maxc >= opts.r_grid[rc]) {
                    st.sum_tau_chem[rc] += double(t);
                    ++st.hit_chem[rc];
                    ++rc;
                }
                while (re < nr &&
                       maxe >= std::int64_t(opts.r_grid[re]) * std::int64_t(opts.r_grid[re])) {
                    st.sum_tau_euc[re] += double(t);
                    ++st.hit_euc[re];
                    ++re;
                }
                if (ti < nt && t == opts.t_grid[ti]) {
                    st.sum_at_chem_sq[ti] += double(d) * double(d);
                    st.sum_max_chem_sq[ti] += double(maxc) * double(maxc);
                    st.sum_at_euc_sq[ti] += double(e);
                    st.sum_max_euc_sq[ti] += double(maxe);
                    ++st.alive[ti];
                    ++ti;
                }
                // censoring: the visit itself still counts, the rest of the
                // walk is discarded
                if (cluster.region.on_boundary(cluster.vertex(v))) break;
            }
        }
        ens.per_cluster.push_back(std::move(st));
    }

    pool_ensemble(ens);
    return ens;
}

void pool_ensemble(DisplacementEnsemble& ens) {
    const EnsembleOptions& opts = ens.opts;
    if (int(ens.per_cluster.size()) != opts.clusters)
        throw std::invalid_argument("pool_ensemble: per-cluster stats do not match options");
    const std::size_t nt = opts.t_grid.size(), nr = opts.r_grid.size();
    const std::int64_t total = std::int64_t(opts.clusters) * opts.walks_per_cluster;
    auto pool = [&](auto member_sum, auto member_cnt, std::size_t m) {
        std::vector<EnsembleCell> cells(m);
        std::vector<double> sums(std::size_t(opts.clusters));
        std::vector<std::int32_t> cnts(std::size_t(opts.clusters));
        for (std::size_t i = 0; i < m; ++i) {
            for (int c = 0; c < opts.clusters; ++c) {
                sums[std::size_t(c)] = (ens.per_cluster[std::size_t(c)].*member_sum)[i];
                cnts[std::size_t(c)] = (ens.per_cluster[std::size_t(c)].*member_cnt)[i];
            }
            cells[i] = pool_cells(sums, cnts, total);
        }
        return cells;
    };
    ens.max_chem_sq = pool(&ClusterWalkStats::sum_max_chem_sq, &ClusterWalkStats::alive, nt);
    ens.at_chem_sq = pool(&ClusterWalkStats::sum_at_chem_sq, &ClusterWalkStats::alive, nt);
    ens.max_euc_sq = pool(&ClusterWalkStats::sum_max_euc_sq, &ClusterWalkStats::alive, nt);
    ens.at_euc_sq = pool(&ClusterWalkStats::sum_at_euc_sq, &ClusterWalkStats::alive, nt);
    ens.tau_chem = pool(&ClusterWalkStats::sum_tau_chem, &ClusterWalkStats::hit_chem, nr);
    ens.tau_euc = pool(&ClusterWalkStats::sum_tau_euc, &ClusterWalkStats::hit_euc, nr);
}

namespace {

struct SeriesView {
    const std::vector<double> ClusterWalkStats::* sum;
    const std::vector<std::int32_t> ClusterWalkStats::* cnt;
    const std::vector<std::int64_t>* xs;  // grid values
    bool displacement;                    // exponent = 2/slope when true
};

struct LinePoints {
    std::vector<double> lx, ly;
};

// pooled log-log points over the given cluster multiset; cells with no
// contributing walks or nonpositive means are skipped
LinePoints pooled_points(const DisplacementEnsemble& ens, const SeriesView& sv,
                         const std::vector<int>& selection, bool drop_first) {
    LinePoints pts;
    std::size_t m = sv.xs->size();
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        std::int64_t cnt = 0;
        for (int c : selection) {
            sum += (ens.per_cluster[std::size_t(c)].*(sv.sum))[i];
            cnt += (ens.per_cluster[std::size_t(c)].*(sv.cnt))[i];
        }
        if (cnt == 0) continue;
        double mean = sum / double(cnt);
        if (!(mean > 0.0)) continue;
        pts.lx.push_back(std::log(double((*sv.xs)[i])));
        pts.ly.push_back(std::log(mean));
    }
    if (drop_first && !pts.lx.empty()) {
        pts.lx.erase(pts.lx.begin());
        pts.ly.erase(pts.ly.begin());
    }
    return pts;
}

bool ols_slope(const LinePoints& pts, double* slope, double* intercept) {
    std::size_t n = pts.lx.size();
    if (n < 2) return false;
    double xb = 0.0, yb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xb += pts.lx[i];
        yb += pts.ly[i];
    }
    xb /= double(n);
    yb /= double(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (pts.lx[i] - xb) * (pts.lx[i] - xb);
        sxy += (pts.lx[i] - xb) * (pts.ly[i] - yb);
    }
    if (sxx <= 0.0) return false;
    *slope = sxy / sxx;
    *intercept = yb - *slope * xb;
    return true;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double pos = q * double(v.size() - 1);
    std::size_t lo = std::size_t(pos);
    if (lo + 1 >= v.size()) return v.back();
    double frac = pos - double(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace

EscapeFits fit_escape_exponents(const DisplacementEnsemble& ens, const FitEscapeOptions& opts) {
    // hitting series live on the R grid; exponent is the slope itself
    std::vector<std::int64_t> r64(ens.opts.r_grid.begin(), ens.opts.r_grid.end());
    const std::array<SeriesView, 5> sv = {
        SeriesView{&ClusterWalkStats::sum_max_chem_sq, &ClusterWalkStats::alive,
                   &ens.opts.t_grid, true},
        SeriesView{&ClusterWalkStats::sum_at_chem_sq, &ClusterWalkStats::alive, &ens.opts.t_grid,
                   true},
        SeriesView{&ClusterWalkStats::sum_max_euc_sq, &ClusterWalkStats::alive, &ens.opts.t_grid,
                   true},
        SeriesView{&ClusterWalkStats::sum_tau_chem, &ClusterWalkStats::hit_chem, &r64, false},
        SeriesView{&ClusterWalkStats::sum_tau_euc, &ClusterWalkStats::hit_euc, &r64, false},
    };

    std::vector<int> all(std::size_t(ens.opts.clusters));
    for (int c = 0; c < ens.opts.clusters; ++c) all[std::size_t(c)] = c;

    std::array<ScalingFit, 5> fits;
    for (std::size_t s = 0; s < 5; ++s) {
        LinePoints pts = pooled_points(ens, sv[s], all, opts.drop_first);
        if (pts.lx.size() < 4)
            throw std::runtime_error("fit_escape_exponents: fewer than 4 usable grid points");
        double slope = 0.0, intercept = 0.0;
        ols_slope(pts, &slope, &intercept);
        fits[s].log_x = pts.lx;
        fits[s].log_y = pts.ly;
        fits[s].slope = slope;
        fits[s].intercept = intercept;
        fits[s].points = int(pts.lx.size());
        fits[s].exponent = sv[s].displacement ? 2.0 / slope : slope;
        LinePoints nodrop = pooled_points(ens, sv[s], all, false);
        double s2 = 0.0, i2 = 0.0;
        if (ols_slope(nodrop, &s2, &i2)) fits[s].slope_nodrop = s2;
    }

    // joint bootstrap over clusters
    std::array<std::vector<double>, 5> boot_slopes;
    std::vector<double> ordering, euc_ordering;
    Xoshiro256pp rng(derive_seed(opts.seed, "escape-boot"));
    int replicates = std::max(0, opts.bootstrap);
    for (int b = 0; b < replicates; ++b) {
        std::vector<int> pick(std::size_t(ens.opts.clusters));
        for (auto& c : pick) c = int(rng.bounded(std::uint64_t(ens.opts.clusters)));
        std::array<double, 5> slopes{};
        bool ok = true;
        for (std::size_t s = 0; s < 5 && ok; ++s) {
            LinePoints pts = pooled_points(ens, sv[s], pick, opts.drop_first);
            double slope = 0.0, intercept = 0.0;
            ok = pts.lx.size() >= 4 && ols_slope(pts, &slope, &intercept);
            slopes[s] = slope;
        }
        if (!ok) continue;
        for (std::size_t s = 0; s < 5; ++s) boot_slopes[s].push_back(slopes[s]);
        if (slopes[0] > 0.0 && slopes[1] > 0.0) {
            double beta_star = 2.0 / slopes[0];
            double beta = 2.0 / slopes[1];
            ordering.push_back(std::min(beta, slopes[3]) - beta_star);
            euc_ordering.push_back(slopes[4] - beta_star);
        }
    }

    for (std::size_t s = 0; s < 5; ++s) {
        auto& bs = boot_slopes[s];
        if (bs.size() < 8) continue;
        double m = 0.0;
        for (double x : bs) m += x;
        m /= double(bs.size());
        double var = 0.0;
        for (double x : bs) var += (x - m) * (x - m);
        fits[s].slope_se = std::sqrt(var / double(bs.size() - 1));
        fits[s].slope_ci_lo = quantile(bs, 0.025);
        fits[s].slope_ci_hi = quantile(bs, 0.975);
        if (sv[s].displacement) {
            // exponent = 2/slope is decreasing, so the interval flips
            if (fits[s].slope_ci_lo > 0.0 && fits[s].slope_ci_hi > 0.0) {
                fits[s].exponent_ci_lo = 2.0 / fits[s].slope_ci_hi;
                fits[s].exponent_ci_hi = 2.0 / fits[s].slope_ci_lo;
            }
        } else {
            fits[s].exponent_ci_lo = fits[s].slope_ci_lo;
            fits[s].exponent_ci_hi = fits[s].slope_ci_hi;
        }
    }

    EscapeFits out;
    out.disp_max_chem = std::move(fits[0]);
    out.disp_at_chem = std::move(fits[1]);
    out.disp_max_euc = std::move(fits[2]);
    out.tau_chem = std::move(fits[3]);
    out.tau_euc = std::move(fits[4]);
    out.ordering_q025 = quantile(ordering, 0.025);
    out.ordering_q975 = quantile(ordering, 0.975);
    out.euc_ordering_q025 = quantile(euc_ordering, 0.025);
    out.euc_ordering_q975 = quantile(euc_ordering, 0.975);
    out.bootstrap = int(boot_slopes[0].size());
    return out;
}

MarkovTypeReport markov_type_ratio(const RootedCluster& cluster, const WeightField& field,
                                   std::span<const std::int64_t> t_grid, int walks,
                                   std::uint64_t seed) {
    if (t_grid.empty()) throw std::invalid_argument("markov_type_ratio: empty t grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] < 1) throw std::invalid_argument("markov_type_ratio: t must be >= 1");
        if (i > 0 && t_grid[i] <= t_grid[i - 1])
            throw std::invalid_argument("markov_type_ratio: t grid must be strictly increasing");
    }
    if (walks < 1) throw std::invalid_argument("markov_type_ratio: walks must be positive");
    if (field.w.size() != std::size_t(cluster.size()))
        throw std::invalid_argument("markov_type_ratio: weight field size mismatch");

    const std::int64_t tmax = t_grid.back();
    // degree-biased start law via the cumulative degree table
    std::vector<std::int64_t> cum(std::size_t(cluster.size()) + 1, 0);
    for (int i = 0; i < cluster.size(); ++i)
        cum[std::size_t(i) + 1] = cum[std::size_t(i)] + cluster.degree(i);

    std::vector<double> sum_sq(t_grid.size(), 0.0), sum_quad(t_grid.size(), 0.0);
    double denom_sum = 0.0;
    std::vector<std::int32_t> at(std::size_t(t_grid.size()), 0);
    for (int w = 0; w < walks; ++w) {
        Xoshiro256pp rng(derive_seed(seed, "mtype-walk", std::uint64_t(w)));
        std::int64_t r = std::int64_t(rng.bounded(std::uint64_t(cum.back())));
        int y0 = int(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin()) - 1;

        int v = y0;
        int y1 = -1;
        std::size_t ti = 0;
        for (std::int64_t t = 1; t <= tmax; ++t) {
            v = walk_step(cluster, v, rng);
            if (t == 1) y1 = v;
            if (ti < t_grid.size() && t == t_grid[ti]) at[ti++] = v;
        }
        std::vector<double> dw = weighted_distances(cluster, field, y0);
        double d1 = dw[std::size_t(y1)];
        denom_sum += d1 * d1;
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            double d = dw[std::size_t(at[i])];
            sum_sq[i] += d * d;
            sum_quad[i] += d * d * d * d;
        }
    }

    MarkovTypeReport rep;
    rep.denom_mean = denom_sum / double(walks);
    if (rep.denom_mean <= 0.0) {
        rep.degenerate = true;
        for (std::size_t i = 0; i < t_grid.size(); ++i)
            rep.cells.push_back(MarkovTypeCell{t_grid[i], 0.0, 0.0, walks});
        return rep;
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        MarkovTypeCell cell;
        cell.t = t_grid[i];
        cell.walks = walks;
        double mean = sum_sq[i] / double(walks);
        cell.ratio = mean / (double(t_grid[i]) * rep.denom_mean);
        if (walks > 1) {
            double var = (sum_quad[i] - double(walks) * mean * mean) / double(walks - 1);
            cell.se = std::sqrt(std::max(0.0, var) / double(walks)) /
                      (double(t_grid[i]) * rep.denom_mean);
        }
        rep.cells.push_back(cell);
    }
    return rep;
}

}  // namespace iiclab
