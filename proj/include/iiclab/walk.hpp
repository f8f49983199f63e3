#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iiclab/metrics.hpp"
#include "iiclab/percolation.hpp"

namespace iiclab {

// One simulated nearest-neighbor walk. Displacements are measured from the
// start vertex: chem[t] is the hop distance dist_G(X_0, X_t), euclid_sq[t]
// the squared Euclidean displacement. Running maxima are kept alongside so
// hitting times are a scan, not a recomputation.
struct WalkTrace {
    const RootedCluster* cluster = nullptr;
    int start = 0;
    std::vector<std::int32_t> path;          // vertex ids, length T+1
    std::vector<std::int32_t> chem;          // dist_G(X0, X_t)
    std::vector<std::int64_t> euclid_sq;     // |X_t - X0|^2
    std::vector<std::int32_t> max_chem;      // running max of chem
    std::vector<std::int64_t> max_euclid_sq; // running max of euclid_sq

    std::int64_t steps() const { return std::int64_t(path.size()) - 1; }
};

// Simple random walk: at each step move to a uniformly random open neighbor.
// Deterministic per (cluster, start, T, seed). T = 0 gives the single-vertex
// trace.
WalkTrace simulate_walk(const RootedCluster& cluster, int start, std::int64_t T,
                        std::uint64_t seed);

// First-passage times per radius: chem[i] is min{t : dist_G(X0,X_t) >= R_i},
// euclid[i] is min{t : |X_t-X0|^2 >= R_i^2}; -1 when not reached within the
// trace. Radii must be nondecreasing.
struct HittingTimes {
    std::vector<std::int64_t> chem;
    std::vector<std::int64_t> euclid;
};

HittingTimes hitting_times(const WalkTrace& trace, std::span<const int> radii);

// ---- ensemble displacement / hitting statistics ----

struct EnsembleOptions {
    IicFlavor flavor = IicFlavor::Largest;
    int n = 64;
    double p = 0.5;
    std::vector<std::int64_t> t_grid;  // strictly increasing, positive
    std::vector<int> r_grid;           // strictly increasing, positive
    int clusters = 8;
    int walks_per_cluster = 4;
    std::uint64_t seed = 0;
    std::uint64_t rejection_cap = 1'000'000;
};

// Per-cluster accumulators. A walk contributes to grid point T (or radius R)
// only while it is uncensored: segments after the first visit to the sample
// box boundary are discarded, since the finite box stops being a faithful
// window there.
struct ClusterWalkStats {
    std::vector<double> sum_at_chem_sq, sum_max_chem_sq;
    std::vector<double> sum_at_euc_sq, sum_max_euc_sq;
    std::vector<std::int32_t> alive;  // walks uncensored through t_grid[i]
    std::vector<double> sum_tau_chem, sum_tau_euc;
    std::vector<std::int32_t> hit_chem, hit_euc;  // finite, uncensored hits
    std::int32_t walks = 0;
};

struct EnsembleCell {
    double mean = 0.0;
    double se = 0.0;  // from the spread of per-cluster means
    std::int64_t count = 0;
    double censored_fraction = 0.0;
};

struct DisplacementEnsemble {
    EnsembleOptions opts;
    std::vector<ClusterWalkStats> per_cluster;
    // pooled per t_grid index
    std::vector<EnsembleCell> max_chem_sq, at_chem_sq, max_euc_sq, at_euc_sq;
    // pooled per r_grid index (means of finite hitting times)
    std::vector<EnsembleCell> tau_chem, tau_euc;
};

DisplacementEnsemble displacement_ensemble(const EnsembleOptions& opts);

// Recomputes the pooled cell vectors from opts + per_cluster. Lets a caller
// that persisted the per-cluster accumulators rebuild a full ensemble (the
// fits only ever read opts and per_cluster).
void pool_ensemble(DisplacementEnsemble& ens);

// ---- escape-exponent fits ----

struct ScalingFit {
    std::vector<double> log_x, log_y;  // the points entering the fit
    double slope = 0.0, intercept = 0.0;
    double slope_se = 0.0;                       // bootstrap sd of the slope
    double slope_ci_lo = 0.0, slope_ci_hi = 0.0; // 95% bootstrap interval
    double exponent = 0.0;                       // 2/slope or slope, see below
    double exponent_ci_lo = 0.0, exponent_ci_hi = 0.0;
    double slope_nodrop = 0.0;  // sensitivity: fit keeping the first grid point
    int points = 0;
};

struct FitEscapeOptions {
    bool drop_first = true;  // drop the smallest T (and R) to damp transients
    int bootstrap = 400;     // cluster-resampling replicates
    std::uint64_t seed = 0;
};

// Exponent conventions: displacement fits report exponent = 2/slope (the
// escape exponent), hitting fits report exponent = slope (the walk
// dimension).
struct EscapeFits {
    ScalingFit disp_max_chem;  // exponent = beta_star
    ScalingFit disp_at_chem;   // exponent = beta
    ScalingFit disp_max_euc;   // Euclidean escape exponent
    ScalingFit tau_chem;       // exponent = d_w
    ScalingFit tau_euc;        // exponent = d_w (Euclidean)
    // bootstrap quantiles of min(beta, d_w) - beta_star and of
    // d_w_euc - beta_star; positive values support the predicted ordering
    double ordering_q025 = 0.0, ordering_q975 = 0.0;
    double euc_ordering_q025 = 0.0, euc_ordering_q975 = 0.0;
    int bootstrap = 0;
};

// Log-log fits with bootstrap over clusters. Throws std::runtime_error when
// fewer than 4 usable grid points remain for any requested fit.
EscapeFits fit_escape_exponents(const DisplacementEnsemble& ens, const FitEscapeOptions& opts);

// ---- Markov-type ratio ----

struct MarkovTypeCell {
    std::int64_t t = 0;
    double ratio = 0.0;  // mean dist_w(Y0,Yt)^2 / (t * mean dist_w(Y0,Y1)^2)
    double se = 0.0;
    std::int64_t walks = 0;
};

struct MarkovTypeReport {
    std::vector<MarkovTypeCell> cells;
    double denom_mean = 0.0;  // mean dist_w(Y0,Y1)^2
    bool degenerate = false;  // weight vanished on every sampled first step
};

// Y0 is drawn from the degree-biased stationary law; one weighted-distance
// sweep per walk start serves every t in the grid.
MarkovTypeReport markov_type_ratio(const RootedCluster& cluster, const WeightField& field,
                                   std::span<const std::int64_t> t_grid, int walks,
                                   std::uint64_t seed);

}  // namespace iiclab
