#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iiclab/connectivity.hpp"
#include "iiclab/covering.hpp"
#include "iiclab/percolation.hpp"

namespace iiclab {

// Where an indicator normalizer (the 1/sqrt(p) constant) came from. The true
// membership probabilities are unknown, so they arrive as Monte Carlo
// estimates; keeping the provenance and error bar next to the value lets
// downstream reports show what the field was actually built from.
struct NormalizerRecord {
    std::string source;      // e.g. "ensemble:root-freq k=4 n=256 x1000"
    double value = 1.0;      // the probability estimate
    double std_error = 0.0;  // its standard error (0 = exact / not applicable)
};

// Nonnegative vertex weight on one cluster. second_moment is the mean of w^2
// under the degree-biased law (deg(v) / sum of degrees), the stationary law
// of the walk on the finite cluster.
struct WeightField {
    const RootedCluster* cluster = nullptr;
    std::vector<double> w;  // indexed by cluster-local vertex id
    double second_moment = 0.0;
    std::vector<NormalizerRecord> normalizers;
};

// Validates (finite, >= 0, one entry per vertex) and fills second_moment.
WeightField make_weight_field(const RootedCluster& cluster, std::vector<double> w,
                              std::vector<NormalizerRecord> normalizers = {});

double degree_biased_second_moment(const RootedCluster& cluster, const std::vector<double>& w);

// BFS distances from a cluster-local source. Clusters are connected, so every
// entry is filled; kept as int32 hop counts.
std::vector<std::int32_t> chemical_distances(const RootedCluster& cluster, int source);

// Dijkstra under the edge length (w(x)+w(y))/2. A path v0..vm therefore costs
// sum_i w(v_i) minus half the endpoint weights. Throws std::invalid_argument
// if any weight is negative or non-finite.
std::vector<double> weighted_distances(const RootedCluster& cluster, const WeightField& field,
                                       int source);

// Indicator of the deep-backbone union at scale k, divided by sqrt(p_hat).
// p_hat.value must lie in (0, 1]; anything else is a degenerate
// normalization (std::invalid_argument).
WeightField scale_weight(const RootedCluster& cluster, const CoveringSystem& sys, int k,
                         double epsilon, const NormalizerRecord& p_hat,
                         BackboneEngine engine = BackboneEngine::Blocks);

// Pointwise sqrt of (6/pi^2) * sum_j w_j^2 / j^2 over the given scales.
// Component j carries the field built at scale k = j (patch side 2^(j-1)).
struct MixtureComponent {
    int j = 1;
    const WeightField* field = nullptr;
};

WeightField mixture_weight(const RootedCluster& cluster,
                           const std::vector<MixtureComponent>& parts);

// Cluster vertices lying in some scale-k patch S with |S ∩ V(G)| >= c4 * 2^(k d').
std::vector<std::uint8_t> large_patch_union(const RootedCluster& cluster,
                                            const CoveringSystem& sys, int k, double c4,
                                            double d_prime);

// w_hat = sqrt((w_deep^2 + w_large^2) / 2), where w_deep is the scale weight
// and w_large = 1_{large patches} / sqrt(q_hat). Support is the union of the
// two supports.
WeightField hybrid_weight(const RootedCluster& cluster, const CoveringSystem& sys, int k,
                          double epsilon, const NormalizerRecord& p_hat,
                          const NormalizerRecord& q_hat, double c4, double d_prime,
                          BackboneEngine engine = BackboneEngine::Blocks);

struct DistancePair {
    std::int32_t dist_g = 0;
    double dist_w = 0.0;
};

struct DistanceFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    // best constant c at the hypothesized exponent 1+delta (least squares in
    // log space with the slope pinned), and the fraction of pairs falling
    // below c * dist_G^(1+delta)
    double c_fit = 0.0;
    double violation_fraction = 0.0;
    double delta = 0.0;
    int floor = 0;
    std::size_t pairs_used = 0;
    std::size_t pairs_zero_weighted = 0;  // dist_w = 0, excluded from the log fit
    // sensitivity: same fit restricted to dist_G >= 2*floor (slope 0 and count
    // 0 when fewer than 10 such pairs remain)
    double slope_floor2x = 0.0;
    std::size_t pairs_floor2x = 0;
    std::vector<DistancePair> pairs;  // the regression sample, for pooling across clusters
};

// Samples vertex pairs with a spread of chemical distances (one target per
// dyadic distance band per source), regresses log dist_w on log dist_g over
// pairs with dist_g >= dist_floor, and reports the fit plus the violation
// fraction at exponent 1+delta. Throws std::runtime_error when fewer than 10
// usable pairs could be collected.
DistanceFit verify_distance_lowerbound(const RootedCluster& cluster, const WeightField& field,
                                       std::size_t target_pairs, double delta, int dist_floor,
                                       std::uint64_t seed);

}  // namespace iiclab
