#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "iiclab/covering.hpp"
#include "iiclab/lattice.hpp"
#include "iiclab/percolation.hpp"

namespace iiclab {

// ---- small graph utilities shared by the path/flow machinery ----

struct LocalGraph {
    int nv = 0;
    std::vector<std::uint32_t> off;  // size nv+1
    std::vector<std::int32_t> adj;
    std::vector<std::int32_t> back;  // local id -> cluster-local id (or -1 for virtual nodes)
};

// Induced subgraph of the cluster on the vertices inside `rect` (whole
// cluster if rect is nullopt). exit_mask[i] marks patch vertices with an open
// edge to a cluster vertex outside the rect.
LocalGraph induced_subgraph(const RootedCluster& cluster, const std::optional<Rect>& rect,
                            std::vector<std::uint8_t>* exit_mask = nullptr);

// max number (capped at 2) of paths from `source` to target vertices,
// vertex-disjoint except at the source; each target absorbs at most one
// path. Unit-capacity max-flow on the vertex-split network.
int disjoint_path_count(const LocalGraph& g, int source, const std::vector<std::uint8_t>& target);

// same, but demanding one path into each of two target sets
bool disjoint_paths_to_both(const LocalGraph& g, int source,
                            const std::vector<std::uint8_t>& target1,
                            const std::vector<std::uint8_t>& target2);

// Biconnected blocks (Hopcroft-Tarjan, iterative). Returns one vertex list
// per block; bridges appear as 2-vertex blocks; isolated vertices appear in
// no block.
std::vector<std::vector<std::int32_t>> biconnected_blocks(const LocalGraph& g);

// ---- arm events and estimation ----

// Whether the origin's open component in `sample` reaches the inner vertex
// boundary of S(n). Requires n <= sample box size.
bool one_arm(const PercolationSample& sample, int n);

// Whether the origin admits two open paths to the boundary of S(n), vertex-
// disjoint except at the origin (distinct landing vertices). Computed by the
// flow route, independent of one_arm's BFS.
bool two_arm(const PercolationSample& sample, int n);

struct ArmCell {
    int n = 0;
    std::int64_t trials = 0;
    std::int64_t one_arm_hits = 0;
    std::int64_t two_arm_hits = 0;
    std::int64_t implication_violations = 0;  // two-arm without one-arm (expected 0)

    double pi1() const { return trials ? double(one_arm_hits) / double(trials) : 0.0; }
    double pi2() const { return trials ? double(two_arm_hits) / double(trials) : 0.0; }
    double pi1_se() const;
    double pi2_se() const;
};

struct ArmStats {
    std::vector<ArmCell> cells;
    // log-log fits below are populated by the harness (fit_arm_exponents)
    double eta1_hat = 0.0, eta1_se = 0.0;
    double eta21_hat = 0.0, eta21_se = 0.0;
    bool fit_valid = false;
};

// Monte Carlo arm probabilities at each radius in `radii`; trial t at radius
// n uses derive_seed(seed, "arms-n", n) -> ("trial", t). Lazy sampling: only
// the origin's component is ever explored.
ArmStats estimate_arms(std::span<const int> radii, std::int64_t trials, std::uint64_t seed);

// ---- patch backbone, depth, unions ----

enum class BackboneEngine {
    Flow,    // biconnected prefilter, then a per-candidate disjoint-path flow test
    Blocks,  // prefilter result taken as the answer (equivalence-tested against Flow)
};

// Exit vertices of a patch: cluster vertices inside `rect` with an open edge
// to a cluster vertex outside. Returned as cluster-local ids, ascending.
std::vector<std::int32_t> exit_vertices(const RootedCluster& cluster, const Rect& rect);

// B_G[S]: cluster vertices in S admitting two paths in G[S], disjoint except
// at the vertex, each ending at an exit vertex (trivially the exit vertices
// themselves). Cluster-local ids, ascending.
std::vector<std::int32_t> backbone(const RootedCluster& cluster, const Rect& rect,
                                   BackboneEngine engine = BackboneEngine::Flow);

// tau_G(S): the largest r such that some patch vertex connected to the exit
// set within G[S] carries an ambient L1 ball B(v, r) inside S. 0 when no
// vertex connects to the exits (or the patch misses the cluster).
int patch_depth(const RootedCluster& cluster, const Rect& rect);

// deep threshold: tau >= ceil(epsilon * side). Measured against the patch
// side; with epsilon = 1/4 this equals the padding radius, which is what
// makes "padded witness => deep patch" go through.
int deep_depth_threshold(double epsilon, int side);

struct DeepBackboneResult {
    std::vector<std::uint8_t> in_union;  // size cluster.size()
    std::int64_t patches_seen = 0;
    std::int64_t patches_deep = 0;
    std::int64_t union_size = 0;
    std::int64_t union_degree_mass = 0;  // sum of degrees over union members
    bool root_in_union = false;
};

// Union of backbones over the deep scale-k patches meeting the cluster.
DeepBackboneResult deep_backbone_union(const RootedCluster& cluster, const CoveringSystem& sys,
                                       int k, double epsilon,
                                       BackboneEngine engine = BackboneEngine::Flow);

// Root-membership fast path: only the <= 4 patches containing the root can
// matter. Equals deep_backbone_union(...).root_in_union.
bool root_in_deep_backbone(const RootedCluster& cluster, const CoveringSystem& sys, int k,
                           double epsilon, BackboneEngine engine = BackboneEngine::Flow);

// B~(m): vertices of S(m) on a simple open path from the origin to the box
// boundary ∂S(m); equivalently, vertices with disjoint arms to the origin and
// to ∂S(m). Engine Flow runs the two-sink disjoint-path test per vertex;
// Blocks walks the block-cut tree once.
std::vector<std::int32_t> kesten_backbone(const RootedCluster& cluster, int m,
                                          BackboneEngine engine = BackboneEngine::Blocks);

// |D ∩ V(G)| for an axis-aligned box D
std::int64_t cluster_volume_in_rect(const RootedCluster& cluster, const Rect& rect);

}  // namespace iiclab
